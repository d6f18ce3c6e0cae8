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
#include <vector>

#include "json.hpp"

#include "affsim/costmodel.hpp"
#include "affsim/metrics.hpp"
#include "affsim/scheduler.hpp"
#include "affsim/topology.hpp"
#include "affsim/trace.hpp"
#include "affsim/workload.hpp"

namespace affsim {

struct SchedPolicy {
  PolicyVariant variant = PolicyVariant::cas;
  SimTime load_balance_interval = std::chrono::milliseconds{10};
  /// Reallocation cadence; demand samples are taken every simulated second.
  SimTime control_interval = std::chrono::seconds{5};
  SimTime time_slice = std::chrono::milliseconds{1};
  void validate() const;
};

struct PredictorConfig {
  double percentile = 99.0;
  int window_seconds = 300;
  void validate() const;
};

struct SimConfig {
  SchedPolicy policy;
  PredictorConfig predictor;
  WarmthParams cost;
  SimTime horizon = std::chrono::seconds{30};
  std::uint64_t seed = 1;
  /// Cores withheld from the monolithic allocation pool.
  CoreSet reserved_cores;
};

/// Resolved run configuration, embedded in every report.
nlohmann::json sim_config_to_json(const SimConfig& config, const MachineTopology& topo,
                                  const std::vector<ContainerSpec>& workload);

struct SimulationResult {
  MetricsReport report;
  /// Measured CPU-units per container for every whole simulated second.
  std::vector<std::vector<double>> usage_per_second;
};

/// Runs one deterministic simulation. Each container keeps a pool of threads:
/// wakeups arrive as a Poisson stream at rate level / mean runnable period and
/// each thread stays runnable for an exponential period, retiring work at the
/// warmth-dependent speed whenever it holds a core. Every record also goes to
/// `trace` when one is given.
SimulationResult run_simulation(const MachineTopology& topo, const std::vector<ContainerSpec>& workload,
                                const SimConfig& config, TraceSink* trace = nullptr);

}  // namespace affsim
