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
#include <string>
#include <vector>

#include "affsim/core_set.hpp"
#include "affsim/topology.hpp"
#include "affsim/trace.hpp"
#include "affsim/units.hpp"

namespace affsim {

struct AuditConfig {
  /// Runnable cpuset per container index.
  std::vector<CoreSet> cpusets;
  SimTime load_balance_interval = std::chrono::milliseconds{10};
  /// Soft-affinity rules only bind the core-aware policy.
  bool check_pinning = true;
  bool check_attraction = true;
};

struct AuditReport {
  std::int64_t records = 0;
  std::int64_t wakeups = 0;
  std::int64_t queued_wakeups = 0;
  /// Wakeups queued although an idle core existed in the cpuset.
  std::int64_t queued_with_idle = 0;
  /// Idle-core-beside-queued-thread episodes lasting longer than one balance interval.
  std::int64_t persistent_idle = 0;
  SimTime longest_idle_episode{0};
  std::int64_t illegal_placements = 0;
  std::int64_t state_errors = 0;
  /// Queued threads moved from a preferred core to a non-preferred one.
  std::int64_t pinning_violations = 0;
  /// Balance ticks that found an idle preferred core and a displaced thread.
  std::int64_t attraction_opportunities = 0;
  std::int64_t attraction_misses = 0;
  std::int64_t attracting_migrations = 0;
  SimTime busy_time{0};
  std::vector<std::string> examples;

  bool ok() const {
    return queued_with_idle == 0 && persistent_idle == 0 && illegal_placements == 0 && state_errors == 0 &&
           pinning_violations == 0 && attraction_misses == 0;
  }
};

/// Replays a trace against its own model of core occupancy and run queues and
/// checks placement legality, work conservation, queued-thread pinning and
/// attraction at balance ticks. Records closed at the horizon are ignored.
class TraceAuditor final : public TraceSink {
 public:
  explicit TraceAuditor(AuditConfig config);
  void record(const TraceRecord& r) override;
  AuditReport finish(SimTime end);

 private:
  enum class St : std::uint8_t { blocked, queued, running, moving };
  struct ThreadView {
    St state = St::blocked;
    CoreId core = -1;
    int container = -1;
  };

  ThreadView& view(int thread, int container);
  void violation(std::int64_t& counter, const TraceRecord& r, const std::string& what);
  bool queued_beside_idle() const;
  bool attraction_possible() const;
  void advance_to(SimTime t);
  void close_attraction_window();

  AuditConfig cfg_;
  AuditReport rep_;
  std::vector<CoreSet> masks_;
  std::vector<int> occupant_;
  std::vector<SimTime> slice_start_;
  CoreSet idle_;
  std::vector<ThreadView> threads_;
  std::int64_t queued_ = 0;
  SimTime now_{0};
  bool started_ = false;
  bool episode_ = false;
  SimTime episode_start_{0};
  bool window_open_ = false;
  bool window_needs_attraction_ = false;
  bool window_attracted_ = false;
};

}  // namespace affsim
