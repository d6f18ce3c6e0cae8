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

#include <optional>
#include <string_view>
#include <vector>

#include "affsim/allocator.hpp"
#include "affsim/sched_state.hpp"

namespace affsim {

enum class PolicyVariant { cas, baseline };

std::string_view to_string(PolicyVariant v);
PolicyVariant policy_variant_from_string(std::string_view name);

enum class PlacementKind { preferred_core, non_preferred_core, queued };

struct Placement {
  CoreId core = -1;
  PlacementKind kind = PlacementKind::queued;
};

struct Migration {
  int thread = -1;
  CoreId from = -1;
  CoreId to = -1;
  bool running = false;
  bool attracting = false;
};

/// Core-aware wakeup: idle core in cpuset & preferred mask, else any idle core
/// in the cpuset, else the shortest queue inside the mask (or the cpuset when
/// the mask does not intersect it). Within a scanned set the thread's last core
/// wins if idle, then the lowest index.
Placement on_wakeup_cas(const SchedState& state, int thread);

/// Work-conserving comparator: last core if idle, else lowest idle cpuset
/// core, else the shortest queue in the cpuset.
Placement on_wakeup_baseline(const SchedState& state, int thread);

Placement on_wakeup(const SchedState& state, int thread, PolicyVariant variant);
void apply_placement(SchedState& state, int thread, const Placement& placement);

/// Fills one idle core whose queue is empty. CAS takes, in order: a queued
/// thread that prefers the core; a queued thread not sitting on one of its own
/// preferred cores; otherwise it moves the running occupant of a core with a
/// pinned waiter onto the idle core so the waiter can run, choosing occupants
/// already outside their mask first, then ones in the idle core's LLC. Queued
/// threads on a preferred core are never moved to a non-preferred one.
std::optional<Migration> newidle_pull_cas(SchedState& state, CoreId idle_core);
/// Baseline takes the longest-waiting eligible queued thread anywhere.
std::optional<Migration> newidle_pull_baseline(SchedState& state, CoreId idle_core);

/// Dispatches from local queues and pulls work onto idle cores until no idle
/// core can take an eligible queued thread.
std::vector<Migration> settle(SchedState& state, PolicyVariant variant);

/// Periodic CAS balance: every idle core attracts one displaced thread of a
/// container preferring it (running or queued), then queue lengths are
/// evened out without moving preferred-queued threads off their mask.
std::vector<Migration> load_balance_cas(SchedState& state);
/// Periodic baseline balance: queue-length balancing across each cpuset.
std::vector<Migration> load_balance_baseline(SchedState& state);
std::vector<Migration> load_balance(SchedState& state, PolicyVariant variant);

/// Replaces preferred masks for the containers named in the plan. Infeasible
/// assignments clear the mask. Returns indices of containers whose mask changed.
std::vector<int> apply_assignment(SchedState& state, const AllocationPlan& plan);

}  // namespace affsim
