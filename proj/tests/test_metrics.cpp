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

#include "affsim/error.hpp"
#include "affsim/metrics.hpp"

using namespace affsim;
using namespace std::chrono_literals;

namespace {

TraceRecord rec(SimTime t, EventKind k, int thread, int container, CoreId core) {
  TraceRecord r;
  r.time = t;
  r.kind = k;
  r.thread = thread;
  r.container = container;
  r.core = core;
  return r;
}

TraceRecord mask(SimTime t, int container, std::vector<CoreId> cores) {
  TraceRecord r = rec(t, EventKind::mask_update, -1, container, -1);
  r.mask = std::move(cores);
  return r;
}

MetricsReport report_with(double throughput, SimTime p99) {
  MetricsReport r;
  r.cores = 4;
  r.horizon = 1s;
  r.throughput_per_cpu = throughput;
  r.latency_p99 = p99;
  r.config = {{"seed", 1}, {"policy", {{"variant", "baseline"}, {"time_slice_ms", 1}}}};
  return r;
}

const MetricDelta& delta(const std::vector<MetricDelta>& ds, const std::string& name) {
  for (const auto& d : ds)
    if (d.metric == name) return d;
  throw std::runtime_error("missing metric " + name);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("pcr: 7.5 s preferred of 10 s") {
    std::vector<TraceRecord> t{
        mask(0s, 0, {0}),
        rec(0s, EventKind::wakeup, 0, 0, -1),
        rec(0s, EventKind::dispatch, 0, 0, 0),
        rec(7500ms, EventKind::preempt, 0, 0, 0),
        rec(7500ms, EventKind::dispatch, 0, 0, 1),
        rec(10s, EventKind::complete, 0, 0, 1),
    };
    CHECK(*compute_pcr(t, 0) == doctest::Approx(0.75));
    CHECK_FALSE(compute_pcr(t, 1).has_value());

    const auto topo = MachineTopology::uniform(1, 2, 2);
    MetricsAccumulator acc(topo, {"A", "B"});
    for (const auto& r : t) acc.record(r);
    auto rep = acc.finish(10s);
    CHECK(*rep.containers[0].pcr == doctest::Approx(0.75));
    CHECK(rep.containers[0].cpu_time_total == 10s);
    CHECK(rep.containers[0].cpu_time_preferred == 7500ms);
    CHECK_FALSE(rep.containers[1].pcr.has_value());
    CHECK(rep.migrations_total == 1);
    CHECK(rep.migrations_cross_llc == 0);
    CHECK(rep.context_switches == 2);
  }

  TEST_CASE("pcr: the mask at dispatch classifies the whole slice") {
    std::vector<TraceRecord> t{
        mask(0s, 0, {0}),
        rec(0s, EventKind::dispatch, 0, 0, 0),
        mask(1s, 0, {1}),
        rec(2s, EventKind::complete, 0, 0, 0),
        rec(3s, EventKind::dispatch, 0, 0, 0),
        rec(4s, EventKind::complete, 0, 0, 0),
    };
    CHECK(*compute_pcr(t, 0) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("pcr: everything on preferred cores gives 1") {
    std::vector<TraceRecord> t{mask(0s, 0, {0, 1, 2, 3}), rec(0s, EventKind::dispatch, 0, 0, 2),
                               rec(1s, EventKind::complete, 0, 0, 2), rec(1s, EventKind::dispatch, 1, 0, 3),
                               rec(5s, EventKind::complete, 1, 0, 3)};
    CHECK(*compute_pcr(t, 0) == 1.0);
  }

  TEST_CASE("latency percentiles") {
    std::vector<TraceRecord> t;
    for (int i = 1; i <= 100; ++i) {
      const SimTime base = std::chrono::milliseconds{i};
      t.push_back(rec(base, EventKind::wakeup, i, 0, -1));
      t.push_back(rec(base + std::chrono::microseconds{i}, EventKind::dispatch, i, 0, 0));
      t.push_back(rec(base + 500us, EventKind::complete, i, 0, 0));
    }
    CHECK(sched_latency_percentile(t, 99) == 99us);
    CHECK(sched_latency_percentile(t, 50) == 50us);
    CHECK(sched_latency_percentile(t, 100) == 100us);

    std::vector<TraceRecord> one{rec(0s, EventKind::wakeup, 0, 0, -1), rec(5us, EventKind::dispatch, 0, 0, 1)};
    for (double p : {1.0, 50.0, 99.0}) CHECK(sched_latency_percentile(one, p) == 5us);

    std::vector<TraceRecord> idle{rec(0s, EventKind::wakeup, 0, 0, -1), rec(0s, EventKind::dispatch, 0, 0, 1)};
    CHECK(sched_latency_percentile(idle, 99) == 0us);

    std::vector<TraceRecord> none{rec(0s, EventKind::balance_tick, -1, -1, -1)};
    CHECK_THROWS_AS(sched_latency_percentile(none, 50), ValidationError);
  }

  TEST_CASE("a thread that blocks while queued contributes its wait") {
    std::vector<TraceRecord> t{rec(0s, EventKind::wakeup, 0, 0, -1), rec(40us, EventKind::complete, 0, 0, 2)};
    t.back().flags = trace_flags::kQueued;
    CHECK(sched_latency_percentile(t, 50) == 40us);
  }

  TEST_CASE("property: latency percentiles match the sort oracle and are monotone in p") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = std::uniform_int_distribution<int>(1, 200)(rng);
      std::vector<SimTime> lat;
      std::vector<double> as_double;
      for (int i = 0; i < n; ++i) {
        lat.emplace_back(std::uniform_int_distribution<std::int64_t>(0, 100000)(rng));
        as_double.push_back(static_cast<double>(lat.back().count()));
      }
      SimTime prev{0};
      for (int p : {1, 10, 50, 90, 95, 99, 100}) {
        const SimTime v = latency_percentile(lat, p);
        CHECK(static_cast<double>(v.count()) == oracle::percentile_by_sort(as_double, p * 100));
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("compare: identical reports give zero deltas") {
    auto a = report_with(1.0, 10us);
    for (const auto& d : compare_reports(a, a))
      if (d.relative) CHECK(*d.relative == 0.0);
  }

  TEST_CASE("compare: relative changes") {
    auto a = report_with(1.0, 10us);
    auto b = report_with(1.1, 11700ns);
    b.config["policy"]["variant"] = "cas";
    auto ds = compare_reports(a, b);
    CHECK(*delta(ds, "throughput_per_cpu").relative == doctest::Approx(0.10));
    CHECK(*delta(ds, "sched_latency_p99_us").relative == doctest::Approx(0.17));
    CHECK_FALSE(delta(ds, "completed_work").relative.has_value());  // zero baseline
    CHECK_FALSE(delta(ds, "aggregate_pcr").relative.has_value());   // absent on both sides

    auto csv = deltas_to_csv(ds);
    CHECK(csv.rfind("metric,a,b,relative\n", 0) == 0);
    CHECK(deltas_to_json(ds).size() == ds.size());

    std::vector<MetricsReport> ra{a}, rb{b};
    auto agg = aggregate_comparison(ra, rb);
    CHECK(agg.seeds == 1);
    CHECK(*agg.throughput_ratio_geomean == doctest::Approx(1.1));
    CHECK(*agg.p99_latency_ratio_geomean == doctest::Approx(1.17));
  }

  TEST_CASE("compare: mismatched configurations are rejected") {
    auto a = report_with(1.0, 10us);
    auto b = report_with(1.0, 10us);
    b.config["seed"] = 2;
    CHECK_THROWS_AS(compare_reports(a, b), ValidationError);
    auto c = report_with(1.0, 10us);
    c.cores = 8;
    CHECK_THROWS_AS(compare_reports(a, c), ValidationError);
  }

  TEST_CASE("report json has stable sections") {
    const auto topo = MachineTopology::uniform(1, 2, 2);
    MetricsAccumulator acc(topo, {"A"});
    acc.record(mask(0s, 0, {0}));
    acc.record(rec(0s, EventKind::wakeup, 0, 0, -1));
    acc.record(rec(1us, EventKind::dispatch, 0, 0, 0));
    TraceRecord done = rec(1ms, EventKind::complete, 0, 0, 0);
    done.work = 999000.0;
    acc.record(done);
    auto j = report_to_json(acc.finish(1s));
    CHECK(j.contains("config"));
    CHECK(j.contains("machine"));
    CHECK(j["containers"][0]["container_id"] == "A");
    CHECK(j["containers"][0]["completed_work"] == 999000.0);
    CHECK(j["containers"][0]["pcr"] == 1.0);
  }
}
