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

#include "affsim/audit.hpp"

#include <algorithm>
#include <sstream>

namespace affsim {

using namespace trace_flags;

namespace {
constexpr std::size_t kMaxExamples = 20;
}

TraceAuditor::TraceAuditor(AuditConfig config) : cfg_(std::move(config)), masks_(cfg_.cpusets.size()) {
  int cores = 0;
  for (const auto& c : cfg_.cpusets)
    c.for_each([&](CoreId id) { cores = std::max(cores, id + 1); });
  occupant_.assign(static_cast<std::size_t>(cores), -1);
  slice_start_.assign(static_cast<std::size_t>(cores), SimTime{0});
  idle_ = CoreSet::range(0, cores);
}

TraceAuditor::ThreadView& TraceAuditor::view(int thread, int container) {
  const auto t = static_cast<std::size_t>(thread);
  if (t >= threads_.size()) threads_.resize(t + 1);
  if (container >= 0) threads_[t].container = container;
  return threads_[t];
}

void TraceAuditor::violation(std::int64_t& counter, const TraceRecord& r, const std::string& what) {
  ++counter;
  if (rep_.examples.size() < kMaxExamples) rep_.examples.push_back(format_trace_line(r) + " : " + what);
}

bool TraceAuditor::queued_beside_idle() const {
  if (queued_ == 0 || idle_.empty()) return false;
  for (const auto& t : threads_)
    if (t.state == St::queued && cfg_.cpusets[static_cast<std::size_t>(t.container)].intersects(idle_)) return true;
  return false;
}

bool TraceAuditor::attraction_possible() const {
  if (idle_.empty()) return false;
  for (const auto& t : threads_) {
    if (t.state != St::queued && t.state != St::running) continue;
    const auto c = static_cast<std::size_t>(t.container);
    if (masks_[c].contains(t.core)) continue;
    if ((masks_[c] & cfg_.cpusets[c]).intersects(idle_)) return true;
  }
  return false;
}

void TraceAuditor::close_attraction_window() {
  if (window_open_ && window_needs_attraction_ && !window_attracted_) {
    ++rep_.attraction_misses;
    if (rep_.examples.size() < kMaxExamples) {
      std::ostringstream s;
      s << "balance tick at " << now_.count() << "ns found a displaced thread but attracted none";
      rep_.examples.push_back(s.str());
    }
  }
  window_open_ = false;
}

void TraceAuditor::advance_to(SimTime t) {
  if (started_ && t == now_) return;
  if (started_) {
    const bool cond = queued_beside_idle();
    if (cond && !episode_) {
      episode_ = true;
      episode_start_ = now_;
    } else if (!cond && episode_) {
      episode_ = false;
      const SimTime span = now_ - episode_start_;
      rep_.longest_idle_episode = std::max(rep_.longest_idle_episode, span);
      if (span > cfg_.load_balance_interval) ++rep_.persistent_idle;
    }
  }
  started_ = true;
  now_ = t;
}

void TraceAuditor::record(const TraceRecord& r) {
  ++rep_.records;
  if (r.time != now_ || !started_) close_attraction_window();
  advance_to(r.time);
  if (window_open_ && (r.kind != EventKind::migrate && r.kind != EventKind::dispatch)) close_attraction_window();

  switch (r.kind) {
    case EventKind::mask_update:
      masks_.at(static_cast<std::size_t>(r.container)) = CoreSet::of(r.mask);
      return;
    case EventKind::balance_tick:
      window_open_ = true;
      window_attracted_ = false;
      window_needs_attraction_ = cfg_.check_attraction && attraction_possible();
      if (window_needs_attraction_) ++rep_.attraction_opportunities;
      return;
    case EventKind::control_tick:
      return;
    default:
      break;
  }

  auto& th = view(r.thread, r.container);
  const auto& cpuset = cfg_.cpusets.at(static_cast<std::size_t>(th.container));
  switch (r.kind) {
    case EventKind::wakeup:
      ++rep_.wakeups;
      if (th.state != St::blocked) violation(rep_.state_errors, r, "wakeup of a thread that is not blocked");
      if (r.has(kQueued)) {
        ++rep_.queued_wakeups;
        if (cpuset.intersects(idle_)) violation(rep_.queued_with_idle, r, "queued while a cpuset core was idle");
        if (!cpuset.contains(r.core)) violation(rep_.illegal_placements, r, "queued outside the cpuset");
        th.state = St::queued;
        th.core = r.core;
        ++queued_;
      } else {
        th.state = St::moving;
      }
      return;
    case EventKind::dispatch: {
      if (!cpuset.contains(r.core)) violation(rep_.illegal_placements, r, "dispatch outside the cpuset");
      const auto c = static_cast<std::size_t>(r.core);
      if (c >= occupant_.size() || occupant_[c] >= 0) {
        violation(rep_.state_errors, r, "dispatch onto a busy core");
        return;
      }
      if (th.state == St::queued) --queued_;
      else if (th.state != St::moving) violation(rep_.state_errors, r, "dispatch of a thread that is neither queued nor placed");
      th.state = St::running;
      th.core = r.core;
      occupant_[c] = r.thread;
      slice_start_[c] = r.time;
      idle_.erase(r.core);
      return;
    }
    case EventKind::preempt:
    case EventKind::complete:
    case EventKind::migrate:
      break;
    default:
      return;
  }

  const bool queued_record = r.has(kQueued);
  if (queued_record) {
    if (th.state != St::queued) {
      violation(rep_.state_errors, r, "queued transition of a thread that is not queued");
      return;
    }
    if (r.kind == EventKind::complete) {
      th.state = St::blocked;
      th.core = -1;
      --queued_;
      return;
    }
    // Queued migration.
    const auto& mask = masks_.at(static_cast<std::size_t>(th.container));
    if (cfg_.check_pinning && mask.contains(r.from_core) && !mask.contains(r.core))
      violation(rep_.pinning_violations, r, "queued thread moved off its preferred cores");
    if (!cpuset.contains(r.core)) violation(rep_.illegal_placements, r, "migration outside the cpuset");
    if (r.has(kAttract) && window_open_) window_attracted_ = true;
    if (r.has(kAttract)) ++rep_.attracting_migrations;
    th.core = r.core;
    return;
  }

  // The record closes a running slice.
  const CoreId from = r.kind == EventKind::migrate ? r.from_core : r.core;
  const auto c = static_cast<std::size_t>(from);
  if (th.state != St::running || c >= occupant_.size() || occupant_[c] != r.thread) {
    violation(rep_.state_errors, r, "slice closed for a thread not running there");
    return;
  }
  rep_.busy_time += r.time - slice_start_[c];
  occupant_[c] = -1;
  idle_.insert(from);
  if (r.has(kHorizon)) {
    th.state = St::blocked;
    return;
  }
  switch (r.kind) {
    case EventKind::preempt:
      th.state = St::queued;
      ++queued_;
      break;
    case EventKind::complete:
      th.state = St::blocked;
      th.core = -1;
      break;
    default:
      if (!cpuset.contains(r.core)) violation(rep_.illegal_placements, r, "migration outside the cpuset");
      if (r.has(kAttract) && window_open_) window_attracted_ = true;
      if (r.has(kAttract)) ++rep_.attracting_migrations;
      th.state = St::moving;
      break;
  }
}

AuditReport TraceAuditor::finish(SimTime end) {
  close_attraction_window();
  if (episode_) {
    const SimTime span = std::max(end, now_) - episode_start_;
    rep_.longest_idle_episode = std::max(rep_.longest_idle_episode, span);
    if (span > cfg_.load_balance_interval) ++rep_.persistent_idle;
    episode_ = false;
  }
  return rep_;
}

}  // namespace affsim
