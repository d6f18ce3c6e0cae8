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
#include <vector>

#include "json.hpp"

#include "affsim/simulator.hpp"
#include "affsim/topology.hpp"
#include "affsim/workload.hpp"

namespace affsim {

/// One experiment description. Only `topology` and `horizon_s` are required;
/// every other field falls back to a default that is written back out by
/// scenario_to_json.
struct Scenario {
  MachineTopology topology;
  SimTime horizon{0};
  std::vector<std::uint64_t> seeds{1};
  WorkloadConfig workload;
  /// Set when containers replay a recorded usage trace instead of the generator.
  std::optional<std::filesystem::path> trace_path;
  std::vector<ContainerSpec> trace_containers;
  SchedPolicy policy;
  PredictorConfig predictor;
  WarmthParams cost;
  CoreSet reserved_cores;

  std::vector<ContainerSpec> workload_for_seed(std::uint64_t seed) const;
  SimConfig sim_config(std::uint64_t seed, PolicyVariant variant) const;
};

/// Strict parse: unknown keys and wrong types raise ParseError. Relative trace
/// paths resolve against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace affsim
