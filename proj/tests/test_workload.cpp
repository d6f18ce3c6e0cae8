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

#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "affsim/error.hpp"
#include "affsim/simulator.hpp"
#include "affsim/workload.hpp"

using namespace affsim;

namespace {

const auto kData = std::filesystem::path(AFFSIM_TEST_DATA);

std::filesystem::path write_temp_trace(const std::string& name, const std::vector<std::string>& rows) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << "container_id,interval_index,usage_cpus\n";
  for (const auto& r : rows) out << r << '\n';
  return path;
}

ContainerSpec lone(double baseline, double amplitude, double probability, std::uint64_t seed = 11) {
  ContainerSpec s;
  s.container_id = "solo";
  s.requested_limit = 8;
  s.runnable_cpuset = CoreSet::range(0, 32);
  s.process.baseline = baseline;
  s.process.burst_amplitude = amplitude;
  s.process.burst_probability = probability;
  s.stream_seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("workload") {
  TEST_CASE("generated baselines respect the target") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    WorkloadConfig cfg;
    cfg.container_count = 8;
    cfg.target_utilization = 0.5;
    auto specs = generate_workload(cfg, topo, 7);
    REQUIRE(specs.size() == 8);
    double sum = 0.0;
    for (const auto& s : specs) {
      sum += s.process.baseline;
      CHECK(s.requested_limit > 0.0);
      CHECK(s.requested_limit <= static_cast<double>(s.runnable_cpuset.size()));
      CHECK(s.process.baseline <= s.requested_limit);
    }
    CHECK(sum <= 16.0 + 1e-9);
  }

  TEST_CASE("generation is deterministic per seed") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    WorkloadConfig cfg;
    auto a = generate_workload(cfg, topo, 7);
    auto b = generate_workload(cfg, topo, 7);
    CHECK(a == b);
    CHECK(workload_to_json(a).dump() == workload_to_json(b).dump());
    CHECK_FALSE(generate_workload(cfg, topo, 8) == a);
  }

  TEST_CASE("target above capacity is rejected") {
    auto topo = MachineTopology::uniform(1, 4, 8);
    WorkloadConfig cfg;
    cfg.target_utilization = 1.2;
    CHECK_THROWS_AS(generate_workload(cfg, topo, 1), ValidationError);
  }

  TEST_CASE("burst frequency over 1000 seconds") {
    UtilizationProcess p(lone(2, 6, 0.1));
    const auto bursts = p.bursts_until(1000);
    std::vector<std::int64_t> seconds;
    for (const auto& b : bursts) seconds.push_back(b.start / std::chrono::seconds{1});
    seconds.erase(std::unique(seconds.begin(), seconds.end()), seconds.end());
    // Bernoulli(0.1) over 1000 trials.
    CHECK(seconds.size() >= 70);
    CHECK(seconds.size() <= 130);
  }

  TEST_CASE("levels follow bursts") {
    UtilizationProcess p(lone(2, 6, 0.5, 3));
    const auto bursts = p.bursts_until(20);
    REQUIRE_FALSE(bursts.empty());
    const auto& b = bursts.front();
    CHECK(p.level_at(b.start) >= 8.0);
    CHECK(p.next_change_after(b.start - SimTime{1}) <= b.start);
    const auto samples = p.expected_usage(20);
    for (const auto& s : samples) {
      CHECK(s.usage >= 2.0);
      CHECK(s.usage <= 32.0);
    }
  }

  TEST_CASE("sample_parallelism tracks the level") {
    UtilizationProcess quiet(lone(4.0, 0, 0));
    std::mt19937_64 rng(5);
    double sum = 0;
    for (int i = 0; i < 10000; ++i) sum += sample_parallelism(quiet, SimTime{i}, rng);
    CHECK(sum / 10000 == doctest::Approx(4.0).epsilon(0.10));

    UtilizationProcess zero(lone(0.0, 0, 0));
    for (int i = 0; i < 100; ++i) CHECK(sample_parallelism(zero, SimTime{i}, rng) == 0);

    UtilizationProcess bursty(lone(1.0, 8, 1.0, 9));
    const auto b = bursty.bursts_until(1).front();
    int peak = 0;
    for (int i = 0; i < 1000; ++i) peak = std::max(peak, sample_parallelism(bursty, b.start, rng));
    CHECK(peak > 8);  // may exceed requested_limit during a burst
  }

  TEST_CASE("generated usage never exceeds the cpuset") {
    auto topo = MachineTopology::uniform(1, 2, 2);
    auto s = lone(3.0, 20.0, 1.0);
    s.runnable_cpuset = CoreSet::range(0, 4);
    UtilizationProcess p(s);
    for (const auto& u : p.expected_usage(50)) CHECK(u.usage <= 4.0);
  }

  TEST_CASE("ingest a small trace") {
    auto specs = ingest_trace(kData / "trace_small.csv");
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].container_id == "c0");
    CHECK(*specs[0].replay_usage == std::vector<double>{1.0, 1.5});
    CHECK(*specs[1].replay_usage == std::vector<double>{2.0, 2.5});
    CHECK(specs[1].requested_limit == 3.0);
  }

  TEST_CASE("ingest two containers of 300 rows") {
    std::vector<std::string> rows;
    for (int i = 0; i < 300; ++i) {
      rows.push_back("a," + std::to_string(i) + ",1.25");
      rows.push_back("b," + std::to_string(i) + ",0.5");
    }
    auto specs = ingest_trace(write_temp_trace("affsim_two_300.csv", rows));
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].replay_usage->size() == 300);
    CHECK(specs[1].replay_usage->size() == 300);
  }

  TEST_CASE("trace errors name the row and field") {
    CHECK_THROWS_WITH_AS(ingest_trace(kData / "trace_negative.csv"), doctest::Contains("row 4"), ParseError);
    CHECK_THROWS_WITH_AS(ingest_trace(kData / "trace_negative.csv"), doctest::Contains("usage_cpus"), ParseError);
    CHECK_THROWS_AS(ingest_trace(kData / "does_not_exist.csv"), ParseError);
    CHECK_THROWS_WITH_AS(ingest_trace(write_temp_trace("affsim_bad_row.csv", {"c0,0"})), doctest::Contains("row 2"),
                         ParseError);
    CHECK_THROWS_AS(ingest_trace(write_temp_trace("affsim_gap.csv", {"c0,0,1", "c0,2,1"})), ParseError);
  }

  TEST_CASE("replayed constant trace measures one CPU per second") {
    std::vector<std::string> rows;
    for (int i = 0; i < 300; ++i) rows.push_back("k," + std::to_string(i) + ",1.0");
    auto specs = ingest_trace(write_temp_trace("affsim_const.csv", rows));
    auto topo = MachineTopology::uniform(1, 4, 8);
    bind_to_topology(specs, topo);
    SimConfig cfg;
    cfg.horizon = std::chrono::seconds{300};
    auto result = run_simulation(topo, specs, cfg);
    const auto& usage = result.usage_per_second.at(0);
    REQUIRE(usage.size() == 300);
    double mean = 0;
    for (double u : usage) {
      CHECK(u <= 32.0);
      mean += u;
    }
    mean /= static_cast<double>(usage.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("workload config json is strict") {
    CHECK_THROWS_WITH_AS(workload_config_from_json(nlohmann::json::parse(R"({"containers_count": 3})")),
                         doctest::Contains("containers_count"), ParseError);
    auto cfg = workload_config_from_json(nlohmann::json::parse(R"({"container_count": 3, "burst_amplitude": 4})"));
    CHECK(cfg.container_count == 3);
    CHECK(cfg.burst_amplitude == 4.0);
    auto round = workload_config_from_json(workload_config_to_json(cfg));
    CHECK(round.container_count == 3);
  }
}
