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

#include "affsim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "affsim/error.hpp"

namespace affsim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

constexpr SimTime kSecond = std::chrono::seconds{1};

std::uint64_t stream_seed_for(std::uint64_t seed, std::size_t index) {
  return splitmix64(splitmix64(seed) ^ (0xA5A5A5A5ULL + static_cast<std::uint64_t>(index)));
}

void validate_process(const UtilizationProcessParams& p, const std::string& id) {
  auto fail = [&](const std::string& what) { throw ValidationError("container '" + id + "': " + what); };
  if (!(p.baseline >= 0.0)) fail("baseline must be >= 0");
  if (!(p.burst_amplitude >= 0.0)) fail("burst_amplitude must be >= 0");
  if (!(p.burst_probability >= 0.0 && p.burst_probability <= 1.0)) fail("burst_probability must be in [0, 1]");
  if (!(p.burst_mean_ms >= 1.0)) fail("burst_mean_ms must be >= 1");
  if (!(p.mean_runnable_us > 0.0)) fail("mean_runnable_us must be > 0");
}

double limit_for(double baseline, double factor, std::size_t cpuset_size) {
  double limit = std::max(1.0, std::ceil(baseline * factor));
  return std::min(limit, static_cast<double>(cpuset_size));
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

WorkloadConfig workload_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("workload: expected an object");
  reject_unknown(j,
                 {"container_count", "target_utilization", "burst_amplitude", "burst_probability", "burst_mean_ms",
                  "mean_runnable_us", "limit_factor", "baseline_spread", "containers"},
                 "workload");
  WorkloadConfig c;
  try {
    c.container_count = get_or(j, "container_count", c.container_count);
    c.target_utilization = get_or(j, "target_utilization", c.target_utilization);
    c.burst_amplitude = get_or(j, "burst_amplitude", c.burst_amplitude);
    c.burst_probability = get_or(j, "burst_probability", c.burst_probability);
    c.burst_mean_ms = get_or(j, "burst_mean_ms", c.burst_mean_ms);
    c.mean_runnable_us = get_or(j, "mean_runnable_us", c.mean_runnable_us);
    c.limit_factor = get_or(j, "limit_factor", c.limit_factor);
    c.baseline_spread = get_or(j, "baseline_spread", c.baseline_spread);
    if (j.contains("containers")) {
      for (const auto& cj : j.at("containers")) {
        reject_unknown(cj,
                       {"container_id", "baseline", "burst_amplitude", "burst_probability", "burst_mean_ms",
                        "mean_runnable_us", "requested_limit", "cpuset"},
                       "workload.containers");
        ContainerTemplate t;
        t.container_id = get_or<std::string>(cj, "container_id", "");
        t.process.baseline = get_or(cj, "baseline", 0.0);
        t.process.burst_amplitude = get_or(cj, "burst_amplitude", 0.0);
        t.process.burst_probability = get_or(cj, "burst_probability", 0.0);
        t.process.burst_mean_ms = get_or(cj, "burst_mean_ms", c.burst_mean_ms);
        t.process.mean_runnable_us = get_or(cj, "mean_runnable_us", c.mean_runnable_us);
        if (cj.contains("requested_limit")) t.requested_limit = cj.at("requested_limit").get<double>();
        if (cj.contains("cpuset")) t.cpuset = cj.at("cpuset").get<std::vector<CoreId>>();
        c.containers.push_back(std::move(t));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("workload: ") + e.what());
  }
  return c;
}

nlohmann::json workload_config_to_json(const WorkloadConfig& c) {
  nlohmann::json j{{"container_count", c.container_count},
                   {"target_utilization", c.target_utilization},
                   {"burst_amplitude", c.burst_amplitude},
                   {"burst_probability", c.burst_probability},
                   {"burst_mean_ms", c.burst_mean_ms},
                   {"mean_runnable_us", c.mean_runnable_us},
                   {"limit_factor", c.limit_factor},
                   {"baseline_spread", c.baseline_spread}};
  if (!c.containers.empty()) {
    auto& arr = j["containers"] = nlohmann::json::array();
    for (const auto& t : c.containers) {
      nlohmann::json cj{{"container_id", t.container_id},
                        {"baseline", t.process.baseline},
                        {"burst_amplitude", t.process.burst_amplitude},
                        {"burst_probability", t.process.burst_probability},
                        {"burst_mean_ms", t.process.burst_mean_ms},
                        {"mean_runnable_us", t.process.mean_runnable_us}};
      if (t.requested_limit) cj["requested_limit"] = *t.requested_limit;
      if (t.cpuset) cj["cpuset"] = *t.cpuset;
      arr.push_back(std::move(cj));
    }
  }
  return j;
}

std::vector<ContainerSpec> generate_workload(const WorkloadConfig& config, const MachineTopology& topo,
                                             std::uint64_t seed) {
  const auto all = topo.all_cores();
  std::vector<ContainerSpec> specs;

  if (!config.containers.empty()) {
    for (std::size_t i = 0; i < config.containers.size(); ++i) {
      const auto& t = config.containers[i];
      ContainerSpec s;
      s.container_id = t.container_id.empty() ? "c" + std::to_string(i) : t.container_id;
      s.process = t.process;
      s.runnable_cpuset = t.cpuset ? CoreSet::of(*t.cpuset) : all;
      s.requested_limit = t.requested_limit.value_or(limit_for(t.process.baseline, config.limit_factor,
                                                                s.runnable_cpuset.size()));
      s.stream_seed = stream_seed_for(seed, i);
      specs.push_back(std::move(s));
    }
    bind_to_topology(specs, topo);
    return specs;
  }

  if (config.container_count < 1) throw ValidationError("workload: container_count must be >= 1");
  if (!(config.target_utilization >= 0.0)) throw ValidationError("workload: target_utilization must be >= 0");
  if (config.target_utilization > 1.0)
    throw ValidationError("workload: target_utilization " + std::to_string(config.target_utilization) +
                          " exceeds machine capacity (must be <= 1.0)");
  if (!(config.baseline_spread >= 0.0 && config.baseline_spread < 1.0))
    throw ValidationError("workload: baseline_spread must be in [0, 1)");
  if (!(config.limit_factor >= 1.0)) throw ValidationError("workload: limit_factor must be >= 1");

  const auto n = static_cast<std::size_t>(config.container_count);
  const double total = config.target_utilization * topo.total_cores();
  const double burst_share = config.burst_amplitude * config.burst_probability * config.burst_mean_ms / 1000.0;
  const double baseline_total = total - static_cast<double>(n) * burst_share;
  if (baseline_total < 0.0)
    throw ValidationError("workload: expected burst load alone exceeds target_utilization");

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> share(1.0 - config.baseline_spread, 1.0 + config.baseline_spread);
  std::vector<double> weights(n);
  double weight_sum = 0.0;
  for (auto& w : weights) weight_sum += (w = share(rng));

  for (std::size_t i = 0; i < n; ++i) {
    ContainerSpec s;
    s.container_id = "c" + std::to_string(i);
    s.runnable_cpuset = all;
    s.process.baseline = baseline_total * weights[i] / weight_sum;
    s.process.burst_amplitude = config.burst_amplitude;
    s.process.burst_probability = config.burst_probability;
    s.process.burst_mean_ms = config.burst_mean_ms;
    s.process.mean_runnable_us = config.mean_runnable_us;
    s.requested_limit = limit_for(s.process.baseline, config.limit_factor, all.size());
    s.stream_seed = stream_seed_for(seed, i);
    specs.push_back(std::move(s));
  }
  bind_to_topology(specs, topo);
  return specs;
}

std::vector<ContainerSpec> ingest_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("trace: cannot open '" + path.string() + "'");

  auto trim_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: '" + path.string() + "' is empty (missing header)");
  trim_cr(line);
  if (line != "container_id,interval_index,usage_cpus")
    throw ParseError("trace: row 1: expected header 'container_id,interval_index,usage_cpus', got '" + line + "'");

  std::vector<std::string> order;
  std::map<std::string, std::map<int, double>> usage;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    trim_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    auto where = "trace: row " + std::to_string(row) + ": ";
    if (fields.size() != 3) throw ParseError(where + "expected 3 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(where + "field container_id is empty");

    int interval = 0;
    {
      const auto& t = fields[1];
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), interval);
      if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
        throw ParseError(where + "field interval_index is not an integer ('" + t + "')");
      if (interval < 0) throw ParseError(where + "field interval_index is negative");
    }
    double value = 0.0;
    {
      const auto& t = fields[2];
      char* end = nullptr;
      value = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(value))
        throw ParseError(where + "field usage_cpus is not a finite number ('" + t + "')");
      if (value < 0.0) throw ParseError(where + "field usage_cpus is negative (" + t + ")");
    }
    auto [it, fresh] = usage.try_emplace(fields[0]);
    if (fresh) order.push_back(fields[0]);
    if (!it->second.emplace(interval, value).second)
      throw ParseError(where + "duplicate interval_index " + std::to_string(interval) + " for container '" +
                       fields[0] + "'");
  }

  std::vector<ContainerSpec> specs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& samples = usage.at(order[i]);
    ContainerSpec s;
    s.container_id = order[i];
    std::vector<double> series;
    for (const auto& [idx, v] : samples) {
      if (idx != static_cast<int>(series.size()))
        throw ParseError("trace: container '" + order[i] + "' is missing interval_index " +
                         std::to_string(series.size()) + " (intervals must be dense from 0)");
      series.push_back(v);
    }
    double peak = series.empty() ? 0.0 : *std::max_element(series.begin(), series.end());
    s.requested_limit = std::max(1.0, std::ceil(peak));
    s.replay_usage = std::move(series);
    s.stream_seed = stream_seed_for(0x7472616365ULL, i);
    specs.push_back(std::move(s));
  }
  return specs;
}

void bind_to_topology(std::vector<ContainerSpec>& specs, const MachineTopology& topo) {
  const auto all = topo.all_cores();
  for (auto& s : specs) {
    if (s.runnable_cpuset.empty()) s.runnable_cpuset = all;
    if (!s.runnable_cpuset.is_subset_of(all))
      throw ValidationError("container '" + s.container_id + "': cpuset references cores outside the machine");
    const double width = static_cast<double>(s.runnable_cpuset.size());
    if (s.replay_usage) {
      s.requested_limit = std::min(s.requested_limit, width);
      for (std::size_t i = 0; i < s.replay_usage->size(); ++i)
        if ((*s.replay_usage)[i] > width)
          throw ValidationError("container '" + s.container_id + "': interval " + std::to_string(i) + " usage " +
                                std::to_string((*s.replay_usage)[i]) + " exceeds cpuset size");
    } else {
      validate_process(s.process, s.container_id);
    }
    if (!(s.requested_limit > 0.0 && s.requested_limit <= width))
      throw ValidationError("container '" + s.container_id + "': requested_limit must be in (0, |cpuset|]");
    if (!s.replay_usage && s.process.baseline > s.requested_limit)
      throw ValidationError("container '" + s.container_id + "': baseline exceeds requested_limit");
  }
}

nlohmann::json workload_to_json(const std::vector<ContainerSpec>& specs) {
  auto arr = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json j{{"container_id", s.container_id},
                     {"requested_limit", s.requested_limit},
                     {"cpuset", s.runnable_cpuset.to_vector()},
                     {"baseline", s.process.baseline},
                     {"burst_amplitude", s.process.burst_amplitude},
                     {"burst_probability", s.process.burst_probability},
                     {"burst_mean_ms", s.process.burst_mean_ms},
                     {"mean_runnable_us", s.process.mean_runnable_us},
                     {"stream_seed", s.stream_seed}};
    if (s.replay_usage) j["replay_seconds"] = s.replay_usage->size();
    arr.push_back(std::move(j));
  }
  return arr;
}

UtilizationProcess::UtilizationProcess(const ContainerSpec& spec)
    : spec_(spec), rng_(splitmix64(spec.stream_seed ^ 0x6275727374ULL)) {}

void UtilizationProcess::generate_through(std::int64_t second) {
  const auto& p = spec_.process;
  std::bernoulli_distribution trigger(p.burst_probability);
  std::uniform_real_distribution<double> offset(0.0, 1.0);
  std::geometric_distribution<int> extra_ms(1.0 / std::max(1.0, p.burst_mean_ms));
  while (generated_seconds_ <= second) {
    const std::int64_t s = generated_seconds_++;
    if (p.burst_probability <= 0.0 || p.burst_amplitude <= 0.0) continue;
    if (!trigger(rng_)) continue;
    Burst b;
    b.start = SimTime{s * kSecond.count()} + from_seconds(offset(rng_));
    b.end = b.start + from_millis(1.0 + extra_ms(rng_));
    longest_burst_ = std::max(longest_burst_, b.end - b.start);
    bursts_.push_back(b);
  }
}

double UtilizationProcess::level_at(SimTime t) {
  if (spec_.replay_usage) {
    auto idx = static_cast<std::size_t>(t / kSecond);
    return idx < spec_.replay_usage->size() ? (*spec_.replay_usage)[idx] : 0.0;
  }
  generate_through(t / kSecond);
  int active = 0;
  auto it = std::upper_bound(bursts_.begin(), bursts_.end(), t, [](SimTime v, const Burst& b) { return v < b.start; });
  while (it != bursts_.begin()) {
    --it;
    if (it->start + longest_burst_ <= t) break;
    if (t < it->end) ++active;
  }
  return spec_.process.baseline + spec_.process.burst_amplitude * active;
}

SimTime UtilizationProcess::next_change_after(SimTime t) {
  if (spec_.replay_usage) {
    auto next = (t / kSecond + 1) * kSecond.count();
    return static_cast<std::size_t>(next / kSecond.count()) <= spec_.replay_usage->size() ? SimTime{next} : kNever;
  }
  const auto& p = spec_.process;
  if (p.burst_probability <= 0.0 || p.burst_amplitude <= 0.0) return kNever;
  generate_through(t / kSecond);
  auto first_after = static_cast<std::size_t>(
      std::upper_bound(bursts_.begin(), bursts_.end(), t, [](SimTime v, const Burst& b) { return v < b.start; }) -
      bursts_.begin());
  SimTime best = kNever;
  for (std::size_t i = first_after; i > 0; --i) {
    const auto& b = bursts_[i - 1];
    if (b.start + longest_burst_ <= t) break;
    if (b.end > t) best = std::min(best, b.end);
  }
  // Seconds after floor(t) are generated on demand; their bursts all start after t.
  while (first_after == bursts_.size()) generate_through(generated_seconds_);
  return std::min(best, bursts_[first_after].start);
}

std::vector<Burst> UtilizationProcess::bursts_until(int seconds) {
  if (seconds > 0) generate_through(seconds - 1);
  std::vector<Burst> out;
  for (const auto& b : bursts_)
    if (b.start < SimTime{static_cast<std::int64_t>(seconds) * kSecond.count()}) out.push_back(b);
  return out;
}

std::vector<UtilizationSample> UtilizationProcess::expected_usage(int seconds) {
  std::vector<UtilizationSample> out;
  const double width =
      spec_.runnable_cpuset.empty() ? std::numeric_limits<double>::infinity() : static_cast<double>(spec_.runnable_cpuset.size());
  if (spec_.replay_usage) {
    for (int s = 0; s < seconds; ++s) out.push_back({s, std::min(width, level_at(SimTime{s * kSecond.count()}))});
    return out;
  }
  auto bursts = bursts_until(seconds);
  for (int s = 0; s < seconds; ++s) {
    const SimTime lo{s * kSecond.count()}, hi{(s + 1) * kSecond.count()};
    double burst_seconds = 0.0;
    for (const auto& b : bursts) {
      auto a = std::max(lo, b.start), e = std::min(hi, b.end);
      if (e > a) burst_seconds += to_seconds(e - a);
    }
    out.push_back({s, std::min(width, spec_.process.baseline + spec_.process.burst_amplitude * burst_seconds)});
  }
  return out;
}

int sample_parallelism(UtilizationProcess& process, SimTime now, std::mt19937_64& rng) {
  const double level = process.level_at(now);
  if (level <= 0.0) return 0;
  std::poisson_distribution<int> draw(level);
  return draw(rng);
}

}  // namespace affsim
