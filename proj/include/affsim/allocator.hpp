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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "affsim/core_set.hpp"
#include "affsim/topology.hpp"
#include "affsim/units.hpp"

namespace affsim {

/// Largest LLC-domain count the combinatorial split-LLC search accepts.
inline constexpr int kMaxSplitLlcDomains = 16;

struct DemandRequest {
  std::string container_id;
  CpuUnits demand;
  /// Empty means unrestricted; otherwise masks are intersected with it.
  CoreSet runnable_cpuset;
};

/// Remaining CPU capacity per LLC domain during one split-LLC allocation pass.
class ChipletCapacityLedger {
 public:
  ChipletCapacityLedger() = default;
  explicit ChipletCapacityLedger(std::vector<CpuUnits> capacity);
  static ChipletCapacityLedger for_topology(const MachineTopology& topo);

  std::size_t size() const { return remaining_.size(); }
  CpuUnits remaining(int domain) const { return remaining_.at(static_cast<std::size_t>(domain)); }
  CpuUnits capacity(int domain) const { return capacity_.at(static_cast<std::size_t>(domain)); }
  CpuUnits total_remaining() const;
  const std::vector<CpuUnits>& remaining() const { return remaining_; }

  /// Overwrites a domain's remaining capacity; must stay within [0, capacity].
  void set_remaining(int domain, CpuUnits value);

  bool operator==(const ChipletCapacityLedger&) const = default;

 private:
  std::vector<CpuUnits> capacity_;
  std::vector<CpuUnits> remaining_;
};

struct AffinityAssignment {
  std::string container_id;
  CoreSet preferred_cores;
  CpuUnits demand;
  CpuUnits granted_capacity;
  bool feasible = false;
  /// Split-LLC: chosen domains. Monolithic: empty.
  std::vector<int> chiplets;
  /// Monolithic: true when the pool ran short of ceil(demand * scale).
  bool clamped = false;
};

enum class AllocationAlgorithm { split_llc, monolithic };

struct AllocationPlan {
  AllocationAlgorithm algorithm = AllocationAlgorithm::split_llc;
  /// In processing order.
  std::vector<AffinityAssignment> assignments;
  std::optional<ChipletCapacityLedger> ledger_after;
  std::optional<double> scale_factor;

  const AffinityAssignment* find(const std::string& container_id) const;
};

/// Minimum-cardinality set of domains whose remaining capacity covers `demand`,
/// ties broken by larger total remaining, then lexicographically smallest ids.
/// Returns an empty vector when no subset fits.
std::vector<int> find_best_set(CpuUnits demand, const ChipletCapacityLedger& ledger);

/// Drains `demand` from the chosen domains in ascending id order.
void update_capacities(ChipletCapacityLedger& ledger, std::span<const int> chosen, CpuUnits demand);

/// Chiplet-granularity allocation: small containers ascending, large ones
/// descending, each onto its best-fitting domain set.
AllocationPlan allocate_split_llc(std::span<const DemandRequest> containers, const MachineTopology& topo);

/// Core-granularity allocation: demands scaled by |pool| / total demand and
/// rounded up, cores taken lowest-index first from the shrinking pool.
AllocationPlan allocate_monolithic(std::span<const DemandRequest> containers, std::span<const CoreId> public_cores);

/// Picks the algorithm matching the topology: split-LLC when any socket has
/// several LLC domains, monolithic otherwise (pool = all cores minus reserved).
AllocationPlan allocate_for_topology(std::span<const DemandRequest> containers, const MachineTopology& topo,
                                     const CoreSet& reserved = {});

nlohmann::json plan_to_json(const AllocationPlan& plan);

}  // namespace affsim
