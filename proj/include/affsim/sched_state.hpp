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

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "affsim/core_set.hpp"
#include "affsim/topology.hpp"
#include "affsim/trace.hpp"
#include "affsim/units.hpp"

namespace affsim {

enum class ThreadState : std::uint8_t { blocked, runnable, running };

struct SimThread {
  int thread_id = 0;
  int container = 0;
  ThreadState state = ThreadState::blocked;
  /// Core whose run queue holds the thread, or that it runs on.
  CoreId core = -1;
  CoreId last_run_core = -1;
  SimTime enqueue_time{};
  /// Outstanding migration penalty; paid before any productive work retires.
  double penalty_debt = 0.0;
  std::uint64_t generation = 0;
};

struct CoreState {
  CoreId core_id = 0;
  int occupant = -1;
  std::deque<int> run_queue;

  bool idle() const { return occupant < 0; }
  std::size_t load() const { return run_queue.size() + (idle() ? 0U : 1U); }
};

struct ContainerSched {
  std::string container_id;
  CoreSet cpuset;
  CoreSet preferred;
};

/// Receives every state transition. Slice-ending callbacks fire before the
/// core loses its occupant; on_dispatch fires after the thread is running.
class SchedObserver {
 public:
  virtual ~SchedObserver() = default;
  virtual void on_dispatch(CoreId, int /*thread*/) {}
  virtual void on_slice_end(CoreId, int /*thread*/, EventKind, CoreId /*to*/, std::uint32_t /*flags*/) {}
  virtual void on_queued_migrate(int /*thread*/, CoreId /*from*/, CoreId /*to*/, std::uint32_t /*flags*/) {}
  virtual void on_queued_complete(int /*thread*/, CoreId) {}
};

/// Per-core run queues and thread placement. Owns no policy: the wakeup and
/// balancing rules live in scheduler.hpp and drive these primitives.
class SchedState {
 public:
  SchedState(const MachineTopology& topo, std::vector<ContainerSched> containers);

  const MachineTopology& topology() const { return *topo_; }
  void set_observer(SchedObserver* observer) { observer_ = observer; }

  SimTime now{};
  std::vector<CoreState> cores;
  std::vector<SimThread> threads;
  std::vector<ContainerSched> containers;

  int add_thread(int container);

  void enqueue(int thread, CoreId core);
  void run_on_idle(int thread, CoreId core);
  void dispatch_next(CoreId core);
  void preempt(CoreId core);
  void block(int thread);
  void migrate_queued(int thread, CoreId to, std::uint32_t flags = 0);
  void migrate_running(int thread, CoreId to, std::uint32_t flags = 0);

  const CoreSet& cpuset_of(int thread) const { return containers[container_of(thread)].cpuset; }
  const CoreSet& mask_of(int thread) const { return containers[container_of(thread)].preferred; }
  bool is_preferred(int thread, CoreId core) const { return mask_of(thread).contains(core); }
  /// Queued on one of its own preferred cores.
  bool is_pinned(int thread) const;

  std::size_t queued_count() const { return queued_; }
  CoreState& core(CoreId c) { return cores[static_cast<std::size_t>(c)]; }
  const CoreState& core(CoreId c) const { return cores[static_cast<std::size_t>(c)]; }
  SimThread& thread(int t) { return threads[static_cast<std::size_t>(t)]; }
  const SimThread& thread(int t) const { return threads[static_cast<std::size_t>(t)]; }

 private:
  std::size_t container_of(int thread) const {
    return static_cast<std::size_t>(threads[static_cast<std::size_t>(thread)].container);
  }
  void remove_from_queue(int thread);
  void start(int thread, CoreId core);

  const MachineTopology* topo_;
  SchedObserver* observer_ = nullptr;
  SchedObserver null_observer_;
  std::size_t queued_ = 0;
};

}  // namespace affsim
