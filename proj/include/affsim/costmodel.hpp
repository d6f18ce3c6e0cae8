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

#include <vector>

#include "json.hpp"

#include "affsim/topology.hpp"
#include "affsim/units.hpp"

namespace affsim {

// Work is measured in instruction-units; one unit retires per simulated
// nanosecond at a speed multiplier of 1.0.

struct WarmthParams {
  SimTime warm_time_constant = std::chrono::microseconds{2000};
  SimTime cool_time_constant = std::chrono::microseconds{5000};
  double cold_speed = 0.8;
  double hot_speed = 1.0;
  double migration_penalty = 10'000.0;
  double llc_cross_penalty = 50'000.0;

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;
  bool operator==(const WarmthParams&) const = default;
};

WarmthParams warmth_params_from_json(const nlohmann::json& j);
nlohmann::json warmth_params_to_json(const WarmthParams& p);

/// Warmth accrued by a container that runs for dt on a core.
double warmth_after_run(double w, SimTime dt, const WarmthParams& p);
/// Warmth left after other containers ran on the core for dt_other.
double warmth_after_eviction(double w, SimTime dt_other, const WarmthParams& p);
double effective_speed(double w, const WarmthParams& p);
/// Instruction-units retired over dt starting at warmth w, integrating the
/// speed along the warming curve.
double work_retired(double w, SimTime dt, const WarmthParams& p);
double migration_cost(CoreId from, CoreId to, const MachineTopology& topo, const WarmthParams& p);

/// Warmth score per (core, container).
class WarmthLedger {
 public:
  WarmthLedger(int cores, int containers) : containers_(containers), w_(static_cast<std::size_t>(cores * containers), 0.0) {}

  double get(CoreId core, int container) const { return w_[index(core, container)]; }
  /// `container` ran on `core` for dt; everyone else on that core cools.
  void on_run(CoreId core, int container, SimTime dt, const WarmthParams& p);

 private:
  std::size_t index(CoreId core, int container) const {
    return static_cast<std::size_t>(core) * static_cast<std::size_t>(containers_) + static_cast<std::size_t>(container);
  }
  int containers_;
  std::vector<double> w_;
};

}  // namespace affsim
