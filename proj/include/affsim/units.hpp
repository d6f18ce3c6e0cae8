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

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace affsim {

using CoreId = int;

/// Simulated time since the start of a run.
using SimTime = std::chrono::nanoseconds;

inline constexpr SimTime kNever = SimTime::max();

inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) / 1e9; }
inline double to_micros(SimTime t) { return static_cast<double>(t.count()) / 1e3; }
inline SimTime from_micros(double us) { return SimTime{std::llround(us * 1e3)}; }
inline SimTime from_millis(double ms) { return SimTime{std::llround(ms * 1e6)}; }
inline SimTime from_seconds(double s) { return SimTime{std::llround(s * 1e9)}; }

/// CPU capacity or demand in fixed point (millionths of a core) so that
/// ledger arithmetic over fractional demands is exact.
class CpuUnits {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr CpuUnits() = default;

  static constexpr CpuUnits from_micros(std::int64_t micros) { return CpuUnits{micros}; }
  static constexpr CpuUnits cores(std::int64_t n) { return CpuUnits{n * kScale}; }
  static CpuUnits from_double(double v) {
    return CpuUnits{static_cast<std::int64_t>(std::llround(v * static_cast<double>(kScale)))};
  }

  constexpr std::int64_t micros() const { return micros_; }
  double to_double() const { return static_cast<double>(micros_) / static_cast<double>(kScale); }

  constexpr CpuUnits operator+(CpuUnits o) const { return CpuUnits{micros_ + o.micros_}; }
  constexpr CpuUnits operator-(CpuUnits o) const { return CpuUnits{micros_ - o.micros_}; }
  constexpr CpuUnits& operator+=(CpuUnits o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr CpuUnits& operator-=(CpuUnits o) {
    micros_ -= o.micros_;
    return *this;
  }
  constexpr auto operator<=>(const CpuUnits&) const = default;

 private:
  constexpr explicit CpuUnits(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

}  // namespace affsim
