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

#include "affsim/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "affsim/error.hpp"

namespace affsim {

void WarmthParams::validate() const {
  if (!(cold_speed > 0.0 && cold_speed <= 1.0)) throw ValidationError("cost_model: cold_speed must be in (0, 1]");
  if (!(hot_speed >= cold_speed)) throw ValidationError("cost_model: hot_speed must be >= cold_speed");
  if (warm_time_constant <= SimTime{0} || cool_time_constant <= SimTime{0})
    throw ValidationError("cost_model: time constants must be > 0");
  if (!(migration_penalty >= 0.0) || !(llc_cross_penalty >= 0.0))
    throw ValidationError("cost_model: penalties must be >= 0");
}

WarmthParams warmth_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("cost_model: expected an object");
  WarmthParams p;
  for (const auto& [key, v] : j.items()) {
    if (!v.is_number()) throw ParseError("cost_model: field '" + key + "' must be a number");
    const double x = v.get<double>();
    if (key == "warm_time_constant_us") p.warm_time_constant = from_micros(x);
    else if (key == "cool_time_constant_us") p.cool_time_constant = from_micros(x);
    else if (key == "cold_speed") p.cold_speed = x;
    else if (key == "hot_speed") p.hot_speed = x;
    else if (key == "migration_penalty") p.migration_penalty = x;
    else if (key == "llc_cross_penalty") p.llc_cross_penalty = x;
    else throw ParseError("cost_model: unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

nlohmann::json warmth_params_to_json(const WarmthParams& p) {
  return {{"warm_time_constant_us", to_micros(p.warm_time_constant)},
          {"cool_time_constant_us", to_micros(p.cool_time_constant)},
          {"cold_speed", p.cold_speed},
          {"hot_speed", p.hot_speed},
          {"migration_penalty", p.migration_penalty},
          {"llc_cross_penalty", p.llc_cross_penalty}};
}

namespace {
double ratio(SimTime dt, SimTime tau) { return static_cast<double>(dt.count()) / static_cast<double>(tau.count()); }
}  // namespace

double warmth_after_run(double w, SimTime dt, const WarmthParams& p) {
  if (dt <= SimTime{0}) return w;
  const double next = w + (1.0 - w) * -std::expm1(-ratio(dt, p.warm_time_constant));
  return std::clamp(next, 0.0, 1.0);
}

double warmth_after_eviction(double w, SimTime dt_other, const WarmthParams& p) {
  if (dt_other <= SimTime{0}) return w;
  return std::clamp(w * std::exp(-ratio(dt_other, p.cool_time_constant)), 0.0, 1.0);
}

double effective_speed(double w, const WarmthParams& p) { return p.cold_speed + (p.hot_speed - p.cold_speed) * w; }

double work_retired(double w, SimTime dt, const WarmthParams& p) {
  if (dt <= SimTime{0}) return 0.0;
  const double t = static_cast<double>(dt.count());
  const double spread = p.hot_speed - p.cold_speed;
  if (spread == 0.0) return p.hot_speed * t;
  // speed(s) = hot - spread * (1 - w) * exp(-s / tau)
  const double tau = static_cast<double>(p.warm_time_constant.count());
  return p.hot_speed * t - spread * (1.0 - w) * tau * -std::expm1(-t / tau);
}

double migration_cost(CoreId from, CoreId to, const MachineTopology& topo, const WarmthParams& p) {
  if (from == to) return 0.0;
  double cost = p.migration_penalty;
  if (!topo.same_llc(from, to)) cost += p.llc_cross_penalty;
  return cost;
}

void WarmthLedger::on_run(CoreId core, int container, SimTime dt, const WarmthParams& p) {
  if (dt <= SimTime{0}) return;
  const double decay = std::exp(-ratio(dt, p.cool_time_constant));
  for (int c = 0; c < containers_; ++c) {
    auto& w = w_[index(core, c)];
    w = c == container ? warmth_after_run(w, dt, p) : std::clamp(w * decay, 0.0, 1.0);
  }
}

}  // namespace affsim
