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

#include "affsim/scenario.hpp"

#include <fstream>

#include "affsim/error.hpp"

namespace affsim {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError(where + "unknown key '" + key + "'");
  }
}

double number(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ParseError(where + "field '" + key + "' must be a number");
  return v.get<double>();
}

SimTime positive_time(double value, double unit_ns, const char* key, const std::string& where) {
  if (!(value > 0.0)) throw ValidationError(where + "field '" + key + "' must be > 0");
  return SimTime{std::llround(value * unit_ns)};
}

void parse_policy(const nlohmann::json& j, Scenario& s) {
  const std::string where = "scenario: policy: ";
  if (!j.is_object()) throw ParseError(where + "expected an object");
  reject_unknown(j,
                 {"variant", "load_balance_interval_ms", "control_interval_s", "time_slice_ms", "percentile",
                  "window_seconds", "reserved_cores"},
                 where);
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw ParseError(where + "field 'variant' must be a string");
    s.policy.variant = policy_variant_from_string(j["variant"].get<std::string>());
  }
  if (j.contains("load_balance_interval_ms"))
    s.policy.load_balance_interval =
        positive_time(number(j, "load_balance_interval_ms", where), 1e6, "load_balance_interval_ms", where);
  if (j.contains("control_interval_s"))
    s.policy.control_interval = positive_time(number(j, "control_interval_s", where), 1e9, "control_interval_s", where);
  if (j.contains("time_slice_ms"))
    s.policy.time_slice = positive_time(number(j, "time_slice_ms", where), 1e6, "time_slice_ms", where);
  if (j.contains("percentile")) s.predictor.percentile = number(j, "percentile", where);
  if (j.contains("window_seconds")) {
    if (!j["window_seconds"].is_number_integer()) throw ParseError(where + "field 'window_seconds' must be an integer");
    s.predictor.window_seconds = j["window_seconds"].get<int>();
  }
  if (j.contains("reserved_cores")) {
    const auto& r = j["reserved_cores"];
    if (!r.is_array()) throw ParseError(where + "field 'reserved_cores' must be an array of core ids");
    for (const auto& c : r) {
      if (!c.is_number_integer()) throw ParseError(where + "field 'reserved_cores' must be an array of core ids");
      const int id = c.get<int>();
      if (id < 0 || id >= s.topology.total_cores())
        throw ValidationError(where + "reserved core " + std::to_string(id) + " is outside the machine");
      s.reserved_cores.insert(id);
    }
  }
  s.policy.validate();
  s.predictor.validate();
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  const std::string where = "scenario: ";
  if (!j.is_object()) throw ParseError(where + "expected a JSON object");
  reject_unknown(j, {"topology", "horizon_s", "seeds", "workload", "trace", "policy", "cost_model"}, where);
  if (!j.contains("topology")) throw ParseError(where + "missing required field 'topology'");
  if (!j.contains("horizon_s")) throw ParseError(where + "missing required field 'horizon_s'");

  Scenario s;
  s.topology = topology_from_json(j["topology"]);
  s.horizon = positive_time(number(j, "horizon_s", where), 1e9, "horizon_s", where);

  if (j.contains("seeds")) {
    const auto& seeds = j["seeds"];
    if (!seeds.is_array() || seeds.empty()) throw ParseError(where + "field 'seeds' must be a non-empty array");
    s.seeds.clear();
    for (const auto& v : seeds) {
      if (!v.is_number_unsigned()) throw ParseError(where + "field 'seeds' must hold non-negative integers");
      s.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("workload") && j.contains("trace"))
    throw ParseError(where + "'workload' and 'trace' are mutually exclusive");
  if (j.contains("workload")) s.workload = workload_config_from_json(j["workload"]);
  if (j.contains("trace")) {
    if (!j["trace"].is_string()) throw ParseError(where + "field 'trace' must be a file path");
    std::filesystem::path p = j["trace"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.trace_path = p;
    s.trace_containers = ingest_trace(p);
    bind_to_topology(s.trace_containers, s.topology);
  }
  if (j.contains("policy")) parse_policy(j["policy"], s);
  if (j.contains("cost_model")) s.cost = warmth_params_from_json(j["cost_model"]);
  s.cost.validate();
  if (!s.trace_path) (void)generate_workload(s.workload, s.topology, s.seeds.front());
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("scenario: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return scenario_from_json(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

std::vector<ContainerSpec> Scenario::workload_for_seed(std::uint64_t seed) const {
  if (trace_path) return trace_containers;
  return generate_workload(workload, topology, seed);
}

SimConfig Scenario::sim_config(std::uint64_t seed, PolicyVariant variant) const {
  SimConfig c;
  c.policy = policy;
  c.policy.variant = variant;
  c.predictor = predictor;
  c.cost = cost;
  c.horizon = horizon;
  c.seed = seed;
  c.reserved_cores = reserved_cores;
  return c;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["topology"] = topology_to_json(s.topology);
  j["horizon_s"] = to_seconds(s.horizon);
  j["seeds"] = s.seeds;
  if (s.trace_path) j["trace"] = s.trace_path->generic_string();
  else j["workload"] = workload_config_to_json(s.workload);
  j["policy"] = {
      {"variant", std::string(to_string(s.policy.variant))},
      {"load_balance_interval_ms", static_cast<double>(s.policy.load_balance_interval.count()) * 1e-6},
      {"control_interval_s", to_seconds(s.policy.control_interval)},
      {"time_slice_ms", static_cast<double>(s.policy.time_slice.count()) * 1e-6},
      {"percentile", s.predictor.percentile},
      {"window_seconds", s.predictor.window_seconds},
      {"reserved_cores", s.reserved_cores.to_vector()},
  };
  j["cost_model"] = warmth_params_to_json(s.cost);
  return j;
}

}  // namespace affsim
