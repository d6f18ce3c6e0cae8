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

#include "affsim/allocator.hpp"

#include <algorithm>
#include <numeric>

#include "affsim/error.hpp"

namespace affsim {

ChipletCapacityLedger::ChipletCapacityLedger(std::vector<CpuUnits> capacity)
    : capacity_(std::move(capacity)), remaining_(capacity_) {
  for (auto c : capacity_)
    if (c < CpuUnits{}) throw ValidationError("ledger: negative domain capacity");
}

ChipletCapacityLedger ChipletCapacityLedger::for_topology(const MachineTopology& topo) {
  std::vector<CpuUnits> caps;
  for (const auto& d : topo.domains()) caps.push_back(CpuUnits::cores(d.capacity()));
  return ChipletCapacityLedger(std::move(caps));
}

CpuUnits ChipletCapacityLedger::total_remaining() const {
  return std::accumulate(remaining_.begin(), remaining_.end(), CpuUnits{});
}

void ChipletCapacityLedger::set_remaining(int domain, CpuUnits value) {
  auto i = static_cast<std::size_t>(domain);
  if (i >= remaining_.size()) throw ValidationError("ledger: domain " + std::to_string(domain) + " out of range");
  if (value < CpuUnits{} || value > capacity_[i])
    throw ValidationError("ledger: remaining capacity out of [0, capacity] for domain " + std::to_string(domain));
  remaining_[i] = value;
}

const AffinityAssignment* AllocationPlan::find(const std::string& container_id) const {
  for (const auto& a : assignments)
    if (a.container_id == container_id) return &a;
  return nullptr;
}

std::vector<int> find_best_set(CpuUnits demand, const ChipletCapacityLedger& ledger) {
  const int n = static_cast<int>(ledger.size());
  std::vector<int> combo;
  for (int size = 1; size <= n; ++size) {
    // Lexicographic enumeration; only a strictly larger sum replaces the
    // incumbent, so equal sums keep the lexicographically first set.
    combo.resize(static_cast<std::size_t>(size));
    std::iota(combo.begin(), combo.end(), 0);
    std::vector<int> best;
    CpuUnits best_sum;
    while (true) {
      CpuUnits sum;
      for (int d : combo) sum += ledger.remaining(d);
      if (sum >= demand && (best.empty() || sum > best_sum)) {
        best = combo;
        best_sum = sum;
      }
      int i = size - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < size; ++k) combo[static_cast<std::size_t>(k)] = combo[static_cast<std::size_t>(k - 1)] + 1;
    }
    if (!best.empty()) return best;
  }
  return {};
}

void update_capacities(ChipletCapacityLedger& ledger, std::span<const int> chosen, CpuUnits demand) {
  std::vector<int> order(chosen.begin(), chosen.end());
  std::sort(order.begin(), order.end());
  CpuUnits available;
  for (int d : order) available += ledger.remaining(d);
  if (demand < CpuUnits{}) throw ValidationError("update_capacities: negative demand");
  if (available < demand)
    throw ValidationError("update_capacities: chosen domains hold " + std::to_string(available.to_double()) +
                          " CPU-units, demand is " + std::to_string(demand.to_double()));
  CpuUnits residual = demand;
  for (int d : order) {
    CpuUnits take = std::min(ledger.remaining(d), residual);
    ledger.set_remaining(d, ledger.remaining(d) - take);
    residual -= take;
    if (residual == CpuUnits{}) break;
  }
}

AllocationPlan allocate_split_llc(std::span<const DemandRequest> containers, const MachineTopology& topo) {
  if (topo.domain_count() < 2)
    throw ValidationError("allocate_split_llc: topology needs at least 2 LLC domains");
  if (topo.domain_count() > kMaxSplitLlcDomains)
    throw ValidationError("allocate_split_llc: " + std::to_string(topo.domain_count()) +
                          " LLC domains exceeds the combinatorial limit of " + std::to_string(kMaxSplitLlcDomains));

  AllocationPlan plan;
  plan.algorithm = AllocationAlgorithm::split_llc;
  auto ledger = ChipletCapacityLedger::for_topology(topo);

  CpuUnits chiplet_cap;
  for (const auto& d : topo.domains()) chiplet_cap = std::max(chiplet_cap, CpuUnits::cores(d.capacity()));

  std::vector<std::size_t> single, multi;
  for (std::size_t i = 0; i < containers.size(); ++i) {
    if (containers[i].demand < CpuUnits{})
      throw ValidationError("allocate_split_llc: negative demand for '" + containers[i].container_id + "'");
    (containers[i].demand <= chiplet_cap ? single : multi).push_back(i);
  }
  std::stable_sort(single.begin(), single.end(),
                   [&](auto a, auto b) { return containers[a].demand < containers[b].demand; });
  std::stable_sort(multi.begin(), multi.end(),
                   [&](auto a, auto b) { return containers[a].demand > containers[b].demand; });
  std::vector<std::size_t> order = single;
  order.insert(order.end(), multi.begin(), multi.end());

  for (auto i : order) {
    const auto& req = containers[i];
    AffinityAssignment a;
    a.container_id = req.container_id;
    a.demand = req.demand;
    auto best = find_best_set(req.demand, ledger);
    if (!best.empty()) {
      CoreSet mask;
      for (int d : best) mask = mask | topo.cores_of_domain(d);
      if (!req.runnable_cpuset.empty()) mask = mask & req.runnable_cpuset;
      if (!mask.empty()) {
        a.preferred_cores = std::move(mask);
        a.chiplets = best;
        a.granted_capacity = req.demand;
        a.feasible = true;
        update_capacities(ledger, best, req.demand);
      }
    }
    plan.assignments.push_back(std::move(a));
  }
  plan.ledger_after = std::move(ledger);
  return plan;
}

AllocationPlan allocate_monolithic(std::span<const DemandRequest> containers, std::span<const CoreId> public_cores) {
  AllocationPlan plan;
  plan.algorithm = AllocationAlgorithm::monolithic;
  if (containers.empty()) return plan;
  if (public_cores.empty()) throw ValidationError("allocate_monolithic: no public cores");

  std::int64_t total_micros = 0;
  for (const auto& c : containers) {
    if (c.demand < CpuUnits{})
      throw ValidationError("allocate_monolithic: negative demand for '" + c.container_id + "'");
    total_micros += c.demand.micros();
  }
  if (total_micros == 0) throw ValidationError("allocate_monolithic: total demand is zero, scale factor undefined");

  CoreSet pool = CoreSet::of(public_cores);
  const auto available = static_cast<std::int64_t>(pool.size());
  plan.scale_factor = static_cast<double>(available) / (static_cast<double>(total_micros) / CpuUnits::kScale);

  for (const auto& req : containers) {
    AffinityAssignment a;
    a.container_id = req.container_id;
    a.demand = req.demand;
    // ceil(demand * available / total) in exact integer arithmetic.
    const std::int64_t numerator = req.demand.micros() * available;
    const std::int64_t scaled = (numerator + total_micros - 1) / total_micros;

    CoreSet candidates = req.runnable_cpuset.empty() ? pool : pool & req.runnable_cpuset;
    CoreSet picked;
    std::int64_t taken = 0;
    candidates.for_each([&](CoreId c) {
      if (taken < scaled) {
        picked.insert(c);
        ++taken;
      }
    });
    a.clamped = taken < scaled;
    pool = pool - picked;
    a.granted_capacity = CpuUnits::cores(taken);
    a.feasible = taken > 0;
    a.preferred_cores = std::move(picked);
    plan.assignments.push_back(std::move(a));
  }
  return plan;
}

AllocationPlan allocate_for_topology(std::span<const DemandRequest> containers, const MachineTopology& topo,
                                     const CoreSet& reserved) {
  if (topo.is_split_llc()) return allocate_split_llc(containers, topo);
  auto pool = (topo.all_cores() - reserved).to_vector();
  return allocate_monolithic(containers, pool);
}

nlohmann::json plan_to_json(const AllocationPlan& plan) {
  nlohmann::json j;
  j["algorithm"] = plan.algorithm == AllocationAlgorithm::split_llc ? "split_llc" : "monolithic";
  auto& arr = j["assignments"] = nlohmann::json::array();
  for (const auto& a : plan.assignments) {
    nlohmann::json aj{{"container_id", a.container_id},
                      {"demand", a.demand.to_double()},
                      {"mask", a.preferred_cores.to_vector()},
                      {"granted_capacity", a.granted_capacity.to_double()},
                      {"feasible", a.feasible}};
    if (plan.algorithm == AllocationAlgorithm::split_llc) aj["chiplets"] = a.chiplets;
    else aj["clamped"] = a.clamped;
    arr.push_back(std::move(aj));
  }
  if (plan.ledger_after) {
    auto& rem = j["ledger_after"] = nlohmann::json::array();
    for (auto r : plan.ledger_after->remaining()) rem.push_back(r.to_double());
  }
  if (plan.scale_factor) j["scale_factor"] = *plan.scale_factor;
  return j;
}

}  // namespace affsim
