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

#include "affsim/scheduler.hpp"

#include <algorithm>
#include <limits>

#include "affsim/error.hpp"

namespace affsim {

using namespace trace_flags;

std::string_view to_string(PolicyVariant v) { return v == PolicyVariant::cas ? "cas" : "baseline"; }

PolicyVariant policy_variant_from_string(std::string_view name) {
  if (name == "cas") return PolicyVariant::cas;
  if (name == "baseline") return PolicyVariant::baseline;
  throw ParseError("policy: unknown variant '" + std::string(name) + "' (expected 'cas' or 'baseline')");
}

namespace {

CoreId lowest_idle(const SchedState& s, const CoreSet& set) {
  CoreId found = -1;
  set.for_each([&](CoreId c) {
    if (found < 0 && s.core(c).idle()) found = c;
  });
  return found;
}

/// The thread's last core when it is idle and in `set`, else the lowest idle core.
CoreId idle_in(const SchedState& s, const CoreSet& set, CoreId last) {
  if (last >= 0 && set.contains(last) && s.core(last).idle()) return last;
  return lowest_idle(s, set);
}

CoreId least_loaded(const SchedState& s, const CoreSet& set) {
  CoreId best = -1;
  std::size_t best_load = std::numeric_limits<std::size_t>::max();
  set.for_each([&](CoreId c) {
    if (s.core(c).load() < best_load) {
      best = c;
      best_load = s.core(c).load();
    }
  });
  return best;
}

const CoreSet& checked_cpuset(const SchedState& s, int thread) {
  const auto& cpuset = s.cpuset_of(thread);
  if (cpuset.empty())
    throw ValidationError("container '" + s.containers[static_cast<std::size_t>(s.thread(thread).container)].container_id +
                          "' has an empty runnable cpuset");
  return cpuset;
}

std::uint32_t migration_flags(const SchedState& s, int thread, CoreId from, CoreId to) {
  std::uint32_t f = 0;
  if (s.is_preferred(thread, to) && !s.is_preferred(thread, from)) f |= kAttract;
  return f;
}

Migration pull_queued(SchedState& s, int thread, CoreId to, std::uint32_t extra) {
  Migration m{thread, s.thread(thread).core, to, false, false};
  auto flags = migration_flags(s, thread, m.from, to) | extra | kQueued;
  m.attracting = (flags & kAttract) != 0;
  s.migrate_queued(thread, to, flags);
  if (s.core(to).idle() && s.core(to).run_queue.front() == thread) s.dispatch_next(to);
  return m;
}

Migration move_running(SchedState& s, int thread, CoreId to, std::uint32_t extra) {
  Migration m{thread, s.thread(thread).core, to, true, false};
  auto flags = migration_flags(s, thread, m.from, to) | extra | kRunning;
  m.attracting = (flags & kAttract) != 0;
  s.migrate_running(thread, to, flags);
  return m;
}

/// Earliest-enqueued queued thread (not already on `exclude`) satisfying pred.
template <typename Pred>
int earliest_queued(const SchedState& s, CoreId exclude, Pred&& pred) {
  int best = -1;
  for (const auto& c : s.cores) {
    if (c.core_id == exclude) continue;
    for (int t : c.run_queue) {
      if (!pred(t, c.core_id)) continue;
      if (best < 0 || s.thread(t).enqueue_time < s.thread(best).enqueue_time ||
          (s.thread(t).enqueue_time == s.thread(best).enqueue_time && t < best))
        best = t;
    }
  }
  return best;
}

}  // namespace

Placement on_wakeup_cas(const SchedState& s, int thread) {
  const auto& cpuset = checked_cpuset(s, thread);
  const CoreSet preferred = cpuset & s.mask_of(thread);
  const CoreId last = s.thread(thread).last_run_core;
  if (CoreId c = idle_in(s, preferred, last); c >= 0) return {c, PlacementKind::preferred_core};
  if (CoreId c = idle_in(s, cpuset, last); c >= 0) return {c, PlacementKind::non_preferred_core};
  return {least_loaded(s, preferred.empty() ? cpuset : preferred), PlacementKind::queued};
}

Placement on_wakeup_baseline(const SchedState& s, int thread) {
  const auto& cpuset = checked_cpuset(s, thread);
  auto kind_of = [&](CoreId c) {
    return s.is_preferred(thread, c) ? PlacementKind::preferred_core : PlacementKind::non_preferred_core;
  };
  const CoreId last = s.thread(thread).last_run_core;
  if (last >= 0 && cpuset.contains(last) && s.core(last).idle()) return {last, kind_of(last)};
  if (CoreId c = lowest_idle(s, cpuset); c >= 0) return {c, kind_of(c)};
  return {least_loaded(s, cpuset), PlacementKind::queued};
}

Placement on_wakeup(const SchedState& s, int thread, PolicyVariant variant) {
  return variant == PolicyVariant::cas ? on_wakeup_cas(s, thread) : on_wakeup_baseline(s, thread);
}

void apply_placement(SchedState& s, int thread, const Placement& p) {
  if (p.kind == PlacementKind::queued) s.enqueue(thread, p.core);
  else s.run_on_idle(thread, p.core);
}

std::optional<Migration> newidle_pull_cas(SchedState& s, CoreId k) {
  if (!s.core(k).idle() || !s.core(k).run_queue.empty() || s.queued_count() == 0) return std::nullopt;

  int t = earliest_queued(s, k, [&](int th, CoreId) { return s.is_preferred(th, k) && s.cpuset_of(th).contains(k); });
  if (t >= 0) return pull_queued(s, t, k, kNewIdle);

  t = earliest_queued(s, k, [&](int th, CoreId on) { return !s.is_preferred(th, on) && s.cpuset_of(th).contains(k); });
  if (t >= 0) return pull_queued(s, t, k, kNewIdle);

  // Every eligible waiter is pinned to its preferred queue. Move the running
  // occupant of such a core instead so the waiter gets the freed CPU. An
  // occupant already outside its mask goes first, then one sharing k's LLC.
  CoreId best = -1;
  int best_rank = 0;
  for (const auto& c : s.cores) {
    if (c.core_id == k || c.idle() || c.run_queue.empty()) continue;
    bool has_waiter = false;
    for (int th : c.run_queue) has_waiter = has_waiter || s.cpuset_of(th).contains(k);
    if (!has_waiter || !s.cpuset_of(c.occupant).contains(k)) continue;
    const int rank = (s.is_preferred(c.occupant, c.core_id) ? 2 : 0) +
                     (s.topology().same_llc(c.core_id, k) ? 0 : 1);
    if (best < 0 || rank < best_rank) {
      best = c.core_id;
      best_rank = rank;
    }
  }
  if (best < 0) return std::nullopt;
  auto m = move_running(s, s.core(best).occupant, k, kNewIdle);
  s.dispatch_next(best);
  return m;
}

std::optional<Migration> newidle_pull_baseline(SchedState& s, CoreId k) {
  if (!s.core(k).idle() || !s.core(k).run_queue.empty() || s.queued_count() == 0) return std::nullopt;
  int t = earliest_queued(s, k, [&](int th, CoreId) { return s.cpuset_of(th).contains(k); });
  if (t >= 0) return pull_queued(s, t, k, kNewIdle);
  return std::nullopt;
}

std::vector<Migration> settle(SchedState& s, PolicyVariant variant) {
  std::vector<Migration> moves;
  bool progress = true;
  while (progress && s.queued_count() > 0) {
    progress = false;
    for (auto& c : s.cores) {
      if (!c.idle()) continue;
      if (!c.run_queue.empty()) {
        s.dispatch_next(c.core_id);
        progress = true;
        continue;
      }
      if (s.queued_count() == 0) break;
      auto m = variant == PolicyVariant::cas ? newidle_pull_cas(s, c.core_id) : newidle_pull_baseline(s, c.core_id);
      if (m) {
        moves.push_back(*m);
        progress = true;
      }
    }
  }
  return moves;
}

namespace {

/// Moves queued threads from long to short queues until no legal move
/// shrinks the sum of squared loads. `allowed(thread, from, to)` filters moves.
template <typename Allowed>
void balance_queues(SchedState& s, std::vector<Migration>& moves, Allowed&& allowed) {
  bool progress = true;
  while (progress) {
    progress = false;
    std::vector<CoreId> by_load;
    for (const auto& c : s.cores)
      if (!c.run_queue.empty()) by_load.push_back(c.core_id);
    std::stable_sort(by_load.begin(), by_load.end(),
                     [&](CoreId a, CoreId b) { return s.core(a).load() > s.core(b).load(); });
    for (CoreId j : by_load) {
      const auto& q = s.core(j).run_queue;
      const std::size_t load_j = s.core(j).load();
      for (auto it = q.rbegin(); it != q.rend() && !progress; ++it) {
        const int t = *it;
        CoreId target = -1;
        std::size_t target_load = load_j;
        bool target_pref = false;
        s.cpuset_of(t).for_each([&](CoreId i) {
          if (i == j || !allowed(t, j, i)) return;
          const auto li = s.core(i).load();
          if (li + 2 > load_j) return;
          const bool pref = s.is_preferred(t, i);
          if (target < 0 || (pref && !target_pref) || (pref == target_pref && li < target_load)) {
            target = i;
            target_load = li;
            target_pref = pref;
          }
        });
        if (target >= 0) {
          moves.push_back(pull_queued(s, t, target, 0));
          progress = true;
        }
      }
      if (progress) break;
    }
  }
}

}  // namespace

std::vector<Migration> load_balance_cas(SchedState& s) {
  std::vector<Migration> moves;
  for (auto& c : s.cores) {
    const CoreId k = c.core_id;
    if (!c.idle()) continue;
    if (!c.run_queue.empty()) {
      s.dispatch_next(k);
      continue;
    }
    // Displaced: a thread whose container prefers k but which sits outside its mask.
    int queued_pick = earliest_queued(s, k, [&](int th, CoreId on) {
      return s.is_preferred(th, k) && !s.is_preferred(th, on) && s.cpuset_of(th).contains(k);
    });
    if (queued_pick >= 0) {
      moves.push_back(pull_queued(s, queued_pick, k, 0));
      continue;
    }
    for (const auto& other : s.cores) {
      const int t = other.occupant;
      if (t < 0 || other.core_id == k) continue;
      if (s.is_preferred(t, k) && !s.is_preferred(t, other.core_id) && s.cpuset_of(t).contains(k)) {
        moves.push_back(move_running(s, t, k, 0));
        break;
      }
    }
  }
  balance_queues(s, moves, [&](int t, CoreId from, CoreId to) {
    return !s.is_preferred(t, from) || s.is_preferred(t, to);
  });
  auto filled = settle(s, PolicyVariant::cas);
  moves.insert(moves.end(), filled.begin(), filled.end());
  return moves;
}

std::vector<Migration> load_balance_baseline(SchedState& s) {
  std::vector<Migration> moves;
  balance_queues(s, moves, [](int, CoreId, CoreId) { return true; });
  auto filled = settle(s, PolicyVariant::baseline);
  moves.insert(moves.end(), filled.begin(), filled.end());
  return moves;
}

std::vector<Migration> load_balance(SchedState& s, PolicyVariant variant) {
  return variant == PolicyVariant::cas ? load_balance_cas(s) : load_balance_baseline(s);
}

std::vector<int> apply_assignment(SchedState& s, const AllocationPlan& plan) {
  std::vector<std::pair<int, CoreSet>> updates;
  for (const auto& a : plan.assignments) {
    int idx = -1;
    for (std::size_t i = 0; i < s.containers.size(); ++i)
      if (s.containers[i].container_id == a.container_id) idx = static_cast<int>(i);
    if (idx < 0) throw ValidationError("apply_assignment: unknown container '" + a.container_id + "'");
    updates.emplace_back(idx, a.feasible ? a.preferred_cores & s.containers[static_cast<std::size_t>(idx)].cpuset
                                         : CoreSet{});
  }
  std::vector<int> changed;
  for (auto& [idx, mask] : updates) {
    auto& current = s.containers[static_cast<std::size_t>(idx)].preferred;
    if (current != mask) {
      current = std::move(mask);
      changed.push_back(idx);
    }
  }
  return changed;
}

}  // namespace affsim
