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
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "affsim/core_set.hpp"
#include "affsim/topology.hpp"
#include "affsim/units.hpp"

namespace affsim {

/// Seed mixer used to derive independent per-container random streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Parameters of one container's utilization process. Levels are in CPU-units
/// (expected number of runnable threads).
struct UtilizationProcessParams {
  double baseline = 0.0;
  double burst_amplitude = 0.0;
  double burst_probability = 0.0;  // per simulated second
  double burst_mean_ms = 20.0;     // mean of the geometric burst duration
  double mean_runnable_us = 2000.0;  // mean length of one runnable period

  bool operator==(const UtilizationProcessParams&) const = default;
};

struct ContainerSpec {
  std::string container_id;
  double requested_limit = 1.0;
  /// Empty until bound to a topology; bind_to_topology() expands it to all cores.
  CoreSet runnable_cpuset;
  UtilizationProcessParams process;
  /// Recorded per-second usage when the container comes from a trace.
  std::optional<std::vector<double>> replay_usage;
  std::uint64_t stream_seed = 0;

  bool operator==(const ContainerSpec&) const = default;
};

struct UtilizationSample {
  int interval_index = 0;
  double usage = 0.0;
};

/// Explicit per-container template, used instead of the synthetic generator.
struct ContainerTemplate {
  std::string container_id;
  UtilizationProcessParams process;
  std::optional<double> requested_limit;
  std::optional<std::vector<CoreId>> cpuset;
};

struct WorkloadConfig {
  int container_count = 8;
  /// Expected machine utilization including bursts, as a fraction of all cores.
  double target_utilization = 0.5;
  double burst_amplitude = 24.0;
  double burst_probability = 0.25;
  double burst_mean_ms = 20.0;
  double mean_runnable_us = 2000.0;
  /// requested_limit = ceil(baseline * limit_factor), capped at the cpuset size.
  double limit_factor = 2.0;
  /// Baseline shares are drawn uniformly from [1 - spread, 1 + spread].
  double baseline_spread = 0.5;
  std::vector<ContainerTemplate> containers;
};

WorkloadConfig workload_config_from_json(const nlohmann::json& j);
nlohmann::json workload_config_to_json(const WorkloadConfig& c);

/// Deterministic for a fixed (config, topology, seed).
std::vector<ContainerSpec> generate_workload(const WorkloadConfig& config, const MachineTopology& topo,
                                             std::uint64_t seed);

/// Reads `container_id,interval_index,usage_cpus`. Containers appear in first-seen order.
std::vector<ContainerSpec> ingest_trace(const std::filesystem::path& path);

/// Resolves empty cpusets to the whole machine and validates every container.
void bind_to_topology(std::vector<ContainerSpec>& specs, const MachineTopology& topo);

nlohmann::json workload_to_json(const std::vector<ContainerSpec>& specs);

struct Burst {
  SimTime start{};
  SimTime end{};
};

/// Per-container level process: baseline plus additive bursts triggered by a
/// per-second Bernoulli draw, or a replay of recorded per-second usage. Bursts
/// are generated lazily in second order from the container's stream seed, so
/// any query sequence sees the same schedule.
class UtilizationProcess {
 public:
  explicit UtilizationProcess(const ContainerSpec& spec);

  double level_at(SimTime t);
  /// First instant strictly after t at which the level changes, or kNever.
  SimTime next_change_after(SimTime t);
  /// All bursts whose trigger fell in seconds [0, seconds).
  std::vector<Burst> bursts_until(int seconds);
  /// Time-averaged level over each whole second, clamped to the cpuset size.
  std::vector<UtilizationSample> expected_usage(int seconds);

  const ContainerSpec& spec() const { return spec_; }

 private:
  void generate_through(std::int64_t second);

  ContainerSpec spec_;
  std::mt19937_64 rng_;
  std::vector<Burst> bursts_;  // sorted by start
  std::int64_t generated_seconds_ = 0;
  SimTime longest_burst_{0};
};

/// Instantaneous runnable-thread count: a Poisson draw around the current level.
int sample_parallelism(UtilizationProcess& process, SimTime now, std::mt19937_64& rng);

}  // namespace affsim
