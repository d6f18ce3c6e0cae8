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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "affsim/core_set.hpp"
#include "affsim/topology.hpp"
#include "affsim/trace.hpp"
#include "affsim/units.hpp"

namespace affsim {

struct ContainerMetrics {
  std::string container_id;
  SimTime cpu_time_total{0};
  SimTime cpu_time_preferred{0};
  /// Absent when the container never ran.
  std::optional<double> pcr;
  double completed_work = 0.0;
  std::int64_t wakeup_count = 0;
};

struct MetricsReport {
  std::vector<ContainerMetrics> containers;
  int cores = 0;
  SimTime horizon{0};
  double completed_work = 0.0;
  /// Completed work per core per simulated nanosecond.
  double throughput_per_cpu = 0.0;
  std::int64_t wakeups = 0;
  /// Absent when the run saw no wakeups.
  std::optional<SimTime> latency_p50;
  std::optional<SimTime> latency_p90;
  std::optional<SimTime> latency_p99;
  std::int64_t migrations_total = 0;
  std::int64_t migrations_cross_llc = 0;
  std::int64_t context_switches = 0;
  SimTime busy_time{0};
  std::optional<double> aggregate_pcr;
  nlohmann::json config = nlohmann::json::object();
};

/// Nearest-rank percentile over latency samples. Throws ValidationError when empty.
SimTime latency_percentile(std::span<const SimTime> latencies, double p);

/// Streaming metrics over trace records. Slices are credited as preferred
/// when their core belongs to the mask active at dispatch. Scheduling latency
/// runs from a wakeup to the thread's next dispatch; a thread that blocks
/// before ever running contributes its whole wait.
class MetricsAccumulator final : public TraceSink {
 public:
  MetricsAccumulator(const MachineTopology& topo, std::vector<std::string> container_ids);
  /// The topology is referenced, not copied.
  MetricsAccumulator(MachineTopology&&, std::vector<std::string>) = delete;

  void record(const TraceRecord& r) override;
  MetricsReport finish(SimTime horizon) const;
  const std::vector<SimTime>& latencies() const { return latencies_; }

 private:
  struct Slice {
    SimTime start{0};
    int container = -1;
    bool preferred = false;
  };
  void close_slice(CoreId core, SimTime end, double work);
  std::vector<int>& grow(std::vector<int>& v, int thread, int fill);

  const MachineTopology* topo_;
  std::vector<ContainerMetrics> containers_;
  std::vector<CoreSet> masks_;
  std::vector<std::optional<Slice>> slices_;
  std::vector<int> last_core_;
  std::vector<int> pending_;  // 1 while a wakeup awaits its first dispatch
  std::vector<SimTime> wake_time_;
  std::vector<SimTime> latencies_;
  std::int64_t migrations_ = 0;
  std::int64_t cross_ = 0;
  std::int64_t switches_ = 0;
};

/// Preferred-core residency of one container over a complete trace.
std::optional<double> compute_pcr(std::span<const TraceRecord> trace, int container);
/// Nearest-rank percentile of wakeup-to-dispatch latency. Throws ValidationError
/// when the trace holds no wakeups.
SimTime sched_latency_percentile(std::span<const TraceRecord> trace, double p);

nlohmann::ordered_json report_to_json(const MetricsReport& r);

struct MetricDelta {
  std::string metric;
  std::optional<double> a;
  std::optional<double> b;
  /// (b - a) / a; absent when a is zero or either side is missing.
  std::optional<double> relative;
};

/// Per-metric relative change from a to b. The two reports must share every
/// configuration field except the policy variant.
std::vector<MetricDelta> compare_reports(const MetricsReport& a, const MetricsReport& b);
nlohmann::json deltas_to_json(std::span<const MetricDelta> deltas);
std::string deltas_to_csv(std::span<const MetricDelta> deltas);

/// Cross-seed summary of paired baseline and core-aware runs.
struct ComparisonAggregate {
  std::size_t seeds = 0;
  /// Geometric mean over seeds of throughput(b) / throughput(a).
  std::optional<double> throughput_ratio_geomean;
  /// Geometric mean of per-seed p99 latency ratios, over seeds where a's p99 is nonzero.
  std::optional<double> p99_latency_ratio_geomean;
  std::int64_t cross_llc_a = 0;
  std::int64_t cross_llc_b = 0;
  /// 1 - cross_llc_b / cross_llc_a.
  std::optional<double> cross_llc_reduction;
  /// CPU-time-weighted preferred residency of the b runs.
  std::optional<double> pcr_b;
};

/// `a[i]` and `b[i]` must be the same seed under the two policies.
ComparisonAggregate aggregate_comparison(std::span<const MetricsReport> a, std::span<const MetricsReport> b);
nlohmann::json aggregate_to_json(const ComparisonAggregate& agg);

}  // namespace affsim
