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

#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "affsim/allocator.hpp"
#include "affsim/error.hpp"

using namespace affsim;

namespace {

CpuUnits cu(double v) { return CpuUnits::from_double(v); }

ChipletCapacityLedger ledger_of(std::initializer_list<double> remaining) {
  std::vector<CpuUnits> caps;
  for (double r : remaining) caps.push_back(cu(r));
  return ChipletCapacityLedger(caps);
}

std::vector<DemandRequest> requests(std::initializer_list<std::pair<const char*, double>> items) {
  std::vector<DemandRequest> out;
  for (const auto& [id, d] : items) out.push_back(DemandRequest{id, cu(d), {}});
  return out;
}

std::vector<double> remaining_of(const ChipletCapacityLedger& l) {
  std::vector<double> out;
  for (auto r : l.remaining()) out.push_back(r.to_double());
  return out;
}

}  // namespace

TEST_SUITE("allocator") {
  TEST_CASE("find_best_set examples") {
    CHECK(find_best_set(cu(8), ledger_of({8, 8, 8, 8})) == std::vector<int>{0});
    CHECK(find_best_set(cu(9), ledger_of({2, 8, 8, 8})) == std::vector<int>{1, 2});
    // Zero demand still yields one domain: the one with the most room.
    CHECK(find_best_set(cu(0), ledger_of({3, 7, 7, 1})) == std::vector<int>{1});
    CHECK(find_best_set(cu(33), ledger_of({8, 8, 8, 8})).empty());
  }

  TEST_CASE("update_capacities examples") {
    auto a = ledger_of({8, 8});
    update_capacities(a, std::vector<int>{0}, cu(5));
    CHECK(remaining_of(a) == std::vector<double>{3, 8});

    auto b = ledger_of({2, 8, 8, 8});
    update_capacities(b, std::vector<int>{1, 2}, cu(9));
    CHECK(remaining_of(b) == std::vector<double>{2, 0, 7, 8});

    auto c = ledger_of({8, 8});
    update_capacities(c, std::vector<int>{0, 1}, cu(16));
    CHECK(remaining_of(c) == std::vector<double>{0, 0});

    auto d = ledger_of({2, 8});
    CHECK_THROWS_AS(update_capacities(d, std::vector<int>{0}, cu(3)), ValidationError);
  }

  TEST_CASE("split-LLC: single container") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    auto reqs = requests({{"A", 4.0}});
    auto plan = allocate_split_llc(reqs, topo);
    REQUIRE(plan.assignments.size() == 1);
    CHECK(plan.assignments[0].preferred_cores == CoreSet::range(0, 8));
    CHECK(remaining_of(*plan.ledger_after) == std::vector<double>{4, 8, 8, 8});
  }

  TEST_CASE("split-LLC: worked three-container case") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    auto reqs = requests({{"C", 10.0}, {"A", 6.0}, {"B", 6.0}});
    auto plan = allocate_split_llc(reqs, topo);
    REQUIRE(plan.assignments.size() == 3);
    CHECK(plan.assignments[0].container_id == "A");
    CHECK(plan.assignments[1].container_id == "B");
    CHECK(plan.assignments[2].container_id == "C");
    CHECK(plan.assignments[0].chiplets == std::vector<int>{0});
    CHECK(plan.assignments[1].chiplets == std::vector<int>{1});
    CHECK(plan.assignments[2].chiplets == std::vector<int>{2, 3});
    CHECK(plan.find("C")->preferred_cores == CoreSet::range(16, 32));
    CHECK(oracle::check_split_plan(reqs, topo, plan).ok);
  }

  TEST_CASE("split-LLC: empty list and infeasible demand") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    auto empty = allocate_split_llc({}, topo);
    CHECK(empty.assignments.empty());
    CHECK(remaining_of(*empty.ledger_after) == std::vector<double>{8, 8, 8, 8});

    auto reqs = requests({{"big", 40.0}});
    auto plan = allocate_split_llc(reqs, topo);
    CHECK_FALSE(plan.assignments[0].feasible);
    CHECK(plan.assignments[0].preferred_cores.empty());
    CHECK(remaining_of(*plan.ledger_after) == std::vector<double>{8, 8, 8, 8});
  }

  TEST_CASE("split-LLC: domain limits") {
    CHECK_THROWS_AS(allocate_split_llc({}, MachineTopology::uniform(1, 1, 8)), ValidationError);
    CHECK_THROWS_AS(allocate_split_llc({}, MachineTopology::uniform(1, 17, 1)), ValidationError);
    CHECK_NOTHROW(allocate_split_llc({}, MachineTopology::uniform(1, 16, 1)));
  }

  TEST_CASE("split-LLC: masks stay inside the runnable cpuset") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    std::vector<DemandRequest> reqs{{"A", cu(3), CoreSet::range(4, 12)}};
    auto plan = allocate_split_llc(reqs, topo);
    CHECK(plan.assignments[0].preferred_cores.is_subset_of(CoreSet::range(4, 12)));
    CHECK_FALSE(plan.assignments[0].preferred_cores.empty());
  }

  TEST_CASE("monolithic examples") {
    std::vector<CoreId> pool32, pool16, pool10;
    for (int i = 0; i < 32; ++i) pool32.push_back(i);
    for (int i = 0; i < 16; ++i) pool16.push_back(i);
    for (int i = 0; i < 10; ++i) pool10.push_back(i);

    auto r1 = requests({{"A", 4}, {"B", 8}, {"C", 4}});
    auto p1 = allocate_monolithic(r1, pool32);
    CHECK(*p1.scale_factor == doctest::Approx(2.0));
    CHECK(p1.assignments[0].preferred_cores == CoreSet::range(0, 8));
    CHECK(p1.assignments[1].preferred_cores == CoreSet::range(8, 24));
    CHECK(p1.assignments[2].preferred_cores == CoreSet::range(24, 32));
    CHECK(oracle::check_monolithic_plan(r1, pool32, p1).ok);

    auto r2 = requests({{"A", 2.5}, {"B", 6.5}, {"C", 7}});
    auto p2 = allocate_monolithic(r2, pool16);
    CHECK(*p2.scale_factor == doctest::Approx(1.0));
    CHECK(p2.assignments[0].preferred_cores.size() == 3);
    CHECK(p2.assignments[1].preferred_cores.size() == 7);
    CHECK(p2.assignments[2].preferred_cores.size() == 6);  // clamped: 7 wanted, 6 left
    CHECK(p2.assignments[2].clamped);

    auto r3 = requests({{"A", 3}, {"B", 3}, {"C", 3}});
    auto p3 = allocate_monolithic(r3, pool10);
    CHECK(p3.assignments[0].preferred_cores.size() == 4);
    CHECK(p3.assignments[1].preferred_cores.size() == 4);
    CHECK(p3.assignments[2].preferred_cores.size() == 2);
    CHECK(p3.assignments[2].clamped);
    CHECK_FALSE(p3.assignments[0].clamped);
    CHECK(oracle::check_monolithic_plan(r3, pool10, p3).ok);
  }

  TEST_CASE("monolithic identity scale with integral demands") {
    std::vector<CoreId> pool;
    for (int i = 0; i < 16; ++i) pool.push_back(i);
    auto r = requests({{"A", 4}, {"B", 5}, {"C", 7}});
    auto p = allocate_monolithic(r, pool);
    CHECK(*p.scale_factor == doctest::Approx(1.0));
    CHECK(p.assignments[0].preferred_cores.size() == 4);
    CHECK(p.assignments[1].preferred_cores.size() == 5);
    CHECK(p.assignments[2].preferred_cores.size() == 7);
  }

  TEST_CASE("monolithic errors and empty input") {
    std::vector<CoreId> pool{0, 1, 2};
    CHECK(allocate_monolithic({}, pool).assignments.empty());
    auto zero = requests({{"A", 0}, {"B", 0}});
    CHECK_THROWS_AS(allocate_monolithic(zero, pool), ValidationError);
  }

  TEST_CASE("topology picks the algorithm") {
    auto r = requests({{"A", 4}, {"B", 8}, {"C", 4}});
    CHECK(allocate_for_topology(r, MachineTopology::uniform(1, 4, 8)).algorithm == AllocationAlgorithm::split_llc);
    auto mono = allocate_for_topology(r, MachineTopology::uniform(1, 1, 32));
    CHECK(mono.algorithm == AllocationAlgorithm::monolithic);
    CHECK(mono.assignments[1].preferred_cores.size() == 16);
    auto reserved = allocate_for_topology(r, MachineTopology::uniform(1, 1, 32), CoreSet::range(0, 16));
    CHECK(*reserved.scale_factor == doctest::Approx(1.0));
    CHECK(reserved.assignments[0].preferred_cores == CoreSet::range(16, 20));
  }

  TEST_CASE("property: split-LLC plans match the exhaustive oracle and conserve capacity") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 300; ++iter) {
      std::uniform_int_distribution<int> nd(2, 6), cap(2, 10), nc(0, 8), dem(0, 1600);
      std::vector<int> sizes(static_cast<std::size_t>(nd(rng)));
      for (auto& s : sizes) s = cap(rng);
      auto topo = MachineTopology::from_domain_sizes({sizes});
      std::vector<DemandRequest> reqs;
      const int n = nc(rng);
      for (int i = 0; i < n; ++i) reqs.push_back({"t" + std::to_string(i), CpuUnits::from_micros(dem(rng) * 10'000LL), {}});
      auto plan = allocate_split_llc(reqs, topo);
      auto check = oracle::check_split_plan(reqs, topo, plan);
      REQUIRE_MESSAGE(check.ok, check.why);

      std::int64_t before = 0, after = 0, granted = 0;
      for (int s : sizes) before += s * CpuUnits::kScale;
      for (auto r : plan.ledger_after->remaining()) after += r.micros();
      for (const auto& a : plan.assignments) {
        if (a.feasible) granted += a.granted_capacity.micros();
        else CHECK(a.preferred_cores.empty());
      }
      CHECK(before - after == granted);
      for (std::size_t d = 0; d < sizes.size(); ++d) {
        CHECK(plan.ledger_after->remaining(static_cast<int>(d)).micros() >= 0);
        CHECK(plan.ledger_after->remaining(static_cast<int>(d)) <= plan.ledger_after->capacity(static_cast<int>(d)));
      }
      // Purity.
      auto again = allocate_split_llc(reqs, topo);
      CHECK(plan_to_json(again) == plan_to_json(plan));
    }
  }

  TEST_CASE("ledger invariants") {
    ChipletCapacityLedger l({cu(4), cu(8)});
    CHECK_THROWS_AS(l.set_remaining(0, cu(5)), ValidationError);
    CHECK_THROWS_AS(l.set_remaining(1, cu(-1)), ValidationError);
    l.set_remaining(1, cu(2.5));
    CHECK(l.total_remaining() == cu(6.5));
  }

  TEST_CASE("plan serialization") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    auto reqs = requests({{"A", 6.0}});
    auto j = plan_to_json(allocate_split_llc(reqs, topo));
    CHECK(j["algorithm"] == "split_llc");
    CHECK(j["assignments"][0]["mask"].size() == 8);
    CHECK(j["assignments"][0]["feasible"] == true);
    CHECK(j["assignments"][0]["granted_capacity"] == 6.0);
  }
}
