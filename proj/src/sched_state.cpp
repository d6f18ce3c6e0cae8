/*
 * Copyright 2026 The affsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "affsim/sched_state.hpp"

#include <algorithm>

#include "affsim/error.hpp"

namespace affsim {

namespace {
[[noreturn]] void invariant_broken(const std::string& what) { throw SimulationError("scheduler state: " + what); }
}  // namespace

SchedState::SchedState(const MachineTopology& topo, std::vector<ContainerSched> conts)
    : containers(std::move(conts)), topo_(&topo) {
  observer_ = &null_observer_;
  for (CoreId c = 0; c < topo.total_cores(); ++c) cores.push_back(CoreState{c, -1, {}});
}

int SchedState::add_thread(int container) {
  if (container < 0 || static_cast<std::size_t>(container) >= containers.size())
    invariant_broken("unknown container " + std::to_string(container));
  SimThread t;
  t.thread_id = static_cast<int>(threads.size());
  t.container = container;
  threads.push_back(t);
  return t.thread_id;
}

bool SchedState::is_pinned(int t) const {
  const auto& th = thread(t);
  return th.state == ThreadState::runnable && is_preferred(t, th.core);
}

void SchedState::enqueue(int t, CoreId c) {
  auto& th = thread(t);
  if (th.state != ThreadState::blocked) invariant_broken("enqueue of a thread that is not blocked");
  th.state = ThreadState::runnable;
  th.core = c;
  th.enqueue_time = now;
  core(c).run_queue.push_back(t);
  ++queued_;
}

void SchedState::start(int t, CoreId c) {
  auto& cs = core(c);
  if (!cs.idle()) invariant_broken("dispatch onto busy core " + std::to_string(c));
  auto& th = thread(t);
  th.state = ThreadState::running;
  th.core = c;
  cs.occupant = t;
  observer_->on_dispatch(c, t);
  th.last_run_core = c;
}

void SchedState::run_on_idle(int t, CoreId c) {
  if (thread(t).state != ThreadState::blocked) invariant_broken("direct placement of a thread that is not blocked");
  start(t, c);
}

void SchedState::dispatch_next(CoreId c) {
  auto& cs = core(c);
  if (cs.run_queue.empty()) invariant_broken("dispatch from an empty queue");
  int t = cs.run_queue.front();
  cs.run_queue.pop_front();
  --queued_;
  start(t, c);
}

void SchedState::preempt(CoreId c) {
  auto& cs = core(c);
  if (cs.idle()) invariant_broken("preempt of an idle core");
  int t = cs.occupant;
  observer_->on_slice_end(c, t, EventKind::preempt, c, 0);
  cs.occupant = -1;
  auto& th = thread(t);
  th.state = ThreadState::runnable;
  th.enqueue_time = now;
  cs.run_queue.push_back(t);
  ++queued_;
}

void SchedState::remove_from_queue(int t) {
  auto& q = core(thread(t).core).run_queue;
  auto it = std::find(q.begin(), q.end(), t);
  if (it == q.end()) invariant_broken("runnable thread missing from its queue");
  q.erase(it);
  --queued_;
}

void SchedState::block(int t) {
  auto& th = thread(t);
  if (th.state == ThreadState::running) {
    observer_->on_slice_end(th.core, t, EventKind::complete, th.core, 0);
    core(th.core).occupant = -1;
  } else if (th.state == ThreadState::runnable) {
    observer_->on_queued_complete(t, th.core);
    remove_from_queue(t);
  }
  th.state = ThreadState::blocked;
  th.core = -1;
  ++th.generation;
}

void SchedState::migrate_queued(int t, CoreId to, std::uint32_t flags) {
  auto& th = thread(t);
  if (th.state != ThreadState::runnable) invariant_broken("queued migration of a thread that is not queued");
  const CoreId from = th.core;
  observer_->on_queued_migrate(t, from, to, flags);
  remove_from_queue(t);
  th.core = to;
  core(to).run_queue.push_back(t);
  ++queued_;
}

void SchedState::migrate_running(int t, CoreId to, std::uint32_t flags) {
  auto& th = thread(t);
  if (th.state != ThreadState::running) invariant_broken("running migration of a thread that is not running");
  if (!core(to).idle()) invariant_broken("running migration onto busy core " + std::to_string(to));
  const CoreId from = th.core;
  observer_->on_slice_end(from, t, EventKind::migrate, to, flags);
  core(from).occupant = -1;
  th.state = ThreadState::blocked;  // transient; start() marks it running
  start(t, to);
}

}  // namespace affsim
