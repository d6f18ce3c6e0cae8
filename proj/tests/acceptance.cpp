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

// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Usage: affsim_acceptance <scenario-dir>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "affsim/allocator.hpp"
#include "affsim/audit.hpp"
#include "affsim/cli.hpp"
#include "affsim/metrics.hpp"
#include "affsim/predictor.hpp"
#include "affsim/scenario.hpp"
#include "affsim/simulator.hpp"

using namespace affsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

fs::path g_scenarios;

std::vector<fs::path> suite_paths() {
  return {g_scenarios / "default_split_llc.json", g_scenarios / "monolithic.json", g_scenarios / "two_socket.json"};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Every split-LLC choice equals the exhaustive-subset oracle.
Outcome allocator_oracle() {
  std::mt19937_64 rng(20260101);
  int instances = 0, choices = 0;
  for (; instances < 1500; ++instances) {
    const int domains = std::uniform_int_distribution<int>(2, 8)(rng);
    std::vector<int> sizes(static_cast<std::size_t>(domains));
    for (auto& s : sizes) s = std::uniform_int_distribution<int>(4, 16)(rng);
    const auto topo = MachineTopology::from_domain_sizes({sizes});
    const int containers = std::uniform_int_distribution<int>(1, 12)(rng);
    std::vector<DemandRequest> reqs;
    for (int c = 0; c < containers; ++c) {
      // Fractional demands in 1/1000 core steps, up to 24 cores.
      const auto milli = std::uniform_int_distribution<std::int64_t>(0, 24'000)(rng);
      reqs.push_back({"c" + std::to_string(c), CpuUnits::from_micros(milli * 1000), {}});
    }
    const auto plan = allocate_split_llc(reqs, topo);
    const auto check = oracle::check_split_plan(reqs, topo, plan);
    if (!check.ok) return {false, "instance " + std::to_string(instances) + ": " + check.why};
    choices += containers;
  }
  return {true, std::to_string(instances) + " instances, " + std::to_string(choices) + " choices match"};
}

// 2. demand() equals the sort-based nearest-rank percentile.
Outcome predictor_oracle() {
  std::mt19937_64 rng(7);
  const std::int64_t ps[] = {50, 90, 95, 99};
  int windows = 0;
  for (; windows < 12'000; ++windows) {
    const auto p = ps[windows % 4];
    const auto window = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 300)(rng));
    DemandHistory h(static_cast<double>(p), window);
    // Overfill some windows so eviction is exercised as well.
    const auto n = std::uniform_int_distribution<std::size_t>(1, window + window / 2)(rng);
    std::vector<double> all;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid values force ties.
      const double v = std::uniform_int_distribution<int>(0, 400)(rng) / 16.0;
      all.push_back(v);
      h.record_sample(v);
    }
    std::vector<double> kept(all.end() - static_cast<std::ptrdiff_t>(std::min(n, window)), all.end());
    const double want = oracle::percentile_by_sort(kept, p * 100);
    if (h.demand() != want)
      return {false, "window " + std::to_string(windows) + ": got " + std::to_string(h.demand()) + " want " +
                         std::to_string(want)};
  }
  return {true, std::to_string(windows) + " windows exact"};
}

// 3. Monolithic structural rules.
Outcome monolithic_suite() {
  std::mt19937_64 rng(3);
  int instances = 0, clamped = 0;
  for (; instances < 2000; ++instances) {
    const int pool_size = std::uniform_int_distribution<int>(1, 64)(rng);
    std::vector<CoreId> pool;
    // Sparse pools model reserved cores.
    for (CoreId c = 0; static_cast<int>(pool.size()) < pool_size; ++c)
      if (std::bernoulli_distribution(0.8)(rng)) pool.push_back(c);
    const int containers = std::uniform_int_distribution<int>(1, 12)(rng);
    std::vector<DemandRequest> reqs;
    for (int c = 0; c < containers; ++c) {
      const auto milli = std::uniform_int_distribution<std::int64_t>(0, 20'000)(rng);
      reqs.push_back({"c" + std::to_string(c), CpuUnits::from_micros(milli * 1000), {}});
    }
    if (reqs[0].demand == CpuUnits{}) reqs[0].demand = CpuUnits::cores(1);
    const auto plan = allocate_monolithic(reqs, pool);
    const auto check = oracle::check_monolithic_plan(reqs, pool, plan);
    if (!check.ok) return {false, "instance " + std::to_string(instances) + ": " + check.why};
    for (const auto& a : plan.assignments) clamped += a.clamped ? 1 : 0;
  }
  return {true, std::to_string(instances) + " instances, " + std::to_string(clamped) + " clamped containers"};
}

struct AuditedRun {
  std::string label;
  AuditReport audit;
};

std::vector<AuditedRun> audit_suite(bool cas_only) {
  std::vector<AuditedRun> out;
  for (const auto& path : suite_paths()) {
    const auto sc = load_scenario(path);
    for (auto seed : sc.seeds) {
      const auto workload = sc.workload_for_seed(seed);
      for (auto v : {PolicyVariant::cas, PolicyVariant::baseline}) {
        if (cas_only && v != PolicyVariant::cas) continue;
        const auto cfg = sc.sim_config(seed, v);
        AuditConfig ac;
        for (const auto& c : workload) ac.cpusets.push_back(c.runnable_cpuset);
        ac.load_balance_interval = cfg.policy.load_balance_interval;
        ac.check_pinning = ac.check_attraction = v == PolicyVariant::cas;
        TraceAuditor auditor(ac);
        run_simulation(sc.topology, workload, cfg, &auditor);
        out.push_back({path.stem().string() + " seed " + std::to_string(seed) + " " + std::string(to_string(v)),
                       auditor.finish(cfg.horizon)});
      }
    }
  }
  return out;
}

std::string first_example(const AuditReport& r) { return r.examples.empty() ? std::string() : ": " + r.examples[0]; }

// 4. No wakeup queues beside an idle cpuset core; no idle-beside-queued episode
// outlives one balance interval.
Outcome work_conservation() {
  std::int64_t wakeups = 0, queued = 0;
  SimTime longest{0};
  const auto runs = audit_suite(false);
  for (const auto& r : runs) {
    const auto& a = r.audit;
    if (a.queued_with_idle || a.persistent_idle || a.illegal_placements || a.state_errors)
      return {false, r.label + ": queued_with_idle=" + std::to_string(a.queued_with_idle) +
                         " persistent=" + std::to_string(a.persistent_idle) +
                         " illegal=" + std::to_string(a.illegal_placements) +
                         " state_errors=" + std::to_string(a.state_errors) + first_example(a)};
    wakeups += a.wakeups;
    queued += a.queued_wakeups;
    longest = std::max(longest, a.longest_idle_episode);
  }
  return {true, std::to_string(runs.size()) + " traces, " + std::to_string(wakeups) + " wakeups (" +
                    std::to_string(queued) + " queued), longest idle-beside-queued " +
                    fmt("%.3f ms", static_cast<double>(longest.count()) / 1e6)};
}

// 5. Pinning and attraction on core-aware traces.
Outcome pinning_attraction() {
  std::int64_t opportunities = 0, attracted = 0;
  const auto runs = audit_suite(true);
  for (const auto& r : runs) {
    const auto& a = r.audit;
    if (a.pinning_violations || a.attraction_misses)
      return {false, r.label + ": pinning_violations=" + std::to_string(a.pinning_violations) +
                         " attraction_misses=" + std::to_string(a.attraction_misses) + first_example(a)};
    opportunities += a.attraction_opportunities;
    attracted += a.attracting_migrations;
  }
  return {opportunities > 0, std::to_string(runs.size()) + " traces, " + std::to_string(opportunities) +
                                 " attraction opportunities, " + std::to_string(attracted) +
                                 " attracting migrations, 0 misses"};
}

struct Paired {
  std::vector<MetricsReport> baseline, cas;
};

Paired run_default(const std::function<void(SimConfig&)>& tweak = {}) {
  const auto sc = load_scenario(g_scenarios / "default_split_llc.json");
  Paired out;
  for (auto seed : sc.seeds) {
    const auto workload = sc.workload_for_seed(seed);
    for (auto v : {PolicyVariant::baseline, PolicyVariant::cas}) {
      auto cfg = sc.sim_config(seed, v);
      if (tweak) tweak(cfg);
      auto rep = run_simulation(sc.topology, workload, cfg).report;
      rep.config = sim_config_to_json(cfg, sc.topology, workload);
      (v == PolicyVariant::cas ? out.cas : out.baseline).push_back(std::move(rep));
    }
  }
  return out;
}

// 6. Directional throughput, latency and locality.
Outcome directional() {
  const auto runs = run_default();
  const auto agg = aggregate_comparison(runs.baseline, runs.cas);
  if (agg.seeds < 10) return {false, "only " + std::to_string(agg.seeds) + " seeds"};
  const double tp = agg.throughput_ratio_geomean.value_or(0.0);
  const double p99 = agg.p99_latency_ratio_geomean.value_or(0.0);
  const double red = agg.cross_llc_reduction.value_or(0.0);
  const bool pass = tp > 1.0 && p99 > 1.0 && red >= 0.5;
  return {pass, std::to_string(agg.seeds) + " seeds: throughput ratio " + fmt("%.4f", tp) + " (>1), p99 ratio " +
                    fmt("%.3f", p99) + " (>1), cross-LLC " + std::to_string(agg.cross_llc_a) + " -> " +
                    std::to_string(agg.cross_llc_b) + " reduction " + fmt("%.3f", red) + " (>=0.5)"};
}

// 7. Preferred-core residency at about half load.
Outcome residency() {
  const auto sc = load_scenario(g_scenarios / "default_split_llc.json");
  if (sc.workload.target_utilization > 0.5) return {false, "default scenario load exceeds 50%"};
  SimTime total{0}, preferred{0}, above{0};
  double util = 0.0;
  for (auto seed : sc.seeds) {
    const auto rep = run_simulation(sc.topology, sc.workload_for_seed(seed), sc.sim_config(seed, PolicyVariant::cas)).report;
    for (const auto& c : rep.containers) {
      total += c.cpu_time_total;
      preferred += c.cpu_time_preferred;
      if (c.pcr && *c.pcr > 0.8) above += c.cpu_time_total;
    }
    util += static_cast<double>(rep.busy_time.count()) / (static_cast<double>(rep.horizon.count()) * rep.cores);
  }
  if (total.count() == 0) return {false, "no CPU time"};
  const double pcr = static_cast<double>(preferred.count()) / static_cast<double>(total.count());
  const double share = static_cast<double>(above.count()) / static_cast<double>(total.count());
  return {pcr >= 0.8, "aggregate PCR " + fmt("%.3f", pcr) + " (>=0.8), measured utilization " +
                          fmt("%.3f", util / static_cast<double>(sc.seeds.size())) + ", CPU time in containers with PCR>0.8 " +
                          fmt("%.3f", share)};
}

// 8. With a flat cost model the policies retire identical work.
Outcome neutrality() {
  const auto runs = run_default([](SimConfig& c) {
    c.cost.cold_speed = c.cost.hot_speed = 1.0;
    c.cost.migration_penalty = c.cost.llc_cross_penalty = 0.0;
  });
  for (std::size_t i = 0; i < runs.cas.size(); ++i)
    if (runs.cas[i].completed_work != runs.baseline[i].completed_work)
      return {false, "seed index " + std::to_string(i) + ": baseline " + fmt("%.17g", runs.baseline[i].completed_work) +
                         " vs cas " + fmt("%.17g", runs.cas[i].completed_work)};
  return {true, std::to_string(runs.cas.size()) + " seeds with identical completed work"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Two cmd_run invocations produce identical files.
Outcome determinism() {
  const auto root = fs::temp_directory_path() / "affsim_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log, err;
  RunOptions o;
  o.scenario = g_scenarios / "default_split_llc.json";
  o.emit_trace = true;
  o.seeds = std::vector<std::uint64_t>{1, 2};
  for (const char* d : {"a", "b"}) {
    o.out_dir = root / d;
    if (cmd_run(o, log, err) != kExitOk) return {false, "cmd_run failed: " + err.str()};
  }
  std::size_t files = 0, bytes = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const auto other = root / "b" / e.path().filename();
    const auto a = slurp(e.path());
    if (!fs::exists(other) || a != slurp(other)) return {false, e.path().filename().string() + " differs"};
    ++files;
    bytes += a.size();
  }
  fs::remove_all(root);
  return {files == 4, std::to_string(files) + " files (" + std::to_string(bytes / 1024) + " KiB) byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <scenario-dir>\n", argv[0]);
    return 2;
  }
  g_scenarios = argv[1];
  const std::vector<Criterion> criteria{
      {1, "allocator optimality oracle", 30, allocator_oracle},
      {2, "predictor percentile oracle", 5, predictor_oracle},
      {3, "monolithic structural suite", 5, monolithic_suite},
      {4, "work conservation", 60, work_conservation},
      {5, "pinning and attraction", 60, pinning_attraction},
      {6, "directional throughput/latency/locality", 120, directional},
      {7, "preferred-core residency", 60, residency},
      {8, "cost-model neutrality", 120, neutrality},
      {9, "determinism", 60, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += " [over time budget]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %d %s: %s (%.2f s / %.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
