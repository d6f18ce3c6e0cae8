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

#include <cstddef>
#include <span>
#include <vector>

namespace affsim {

/// 1-based nearest rank ceil(p/100 * n), clamped to [1, n].
std::size_t nearest_rank(double percentile, std::size_t n);

/// Nearest-rank percentile of `values` (copied; selection, not a full sort).
/// Throws ColdStartError on an empty span.
double nearest_rank_percentile(std::span<const double> values, double percentile);

/// Trailing window of per-second utilization samples for one container.
class DemandHistory {
 public:
  static constexpr std::size_t kDefaultWindow = 300;
  static constexpr double kDefaultPercentile = 99.0;

  explicit DemandHistory(double percentile = kDefaultPercentile, std::size_t window_seconds = kDefaultWindow);

  /// Appends one sample, evicting the oldest once the window is full.
  void record_sample(double usage);

  /// p-th percentile of the retained samples. Throws ColdStartError when empty;
  /// callers substitute the container's requested limit.
  double demand() const;
  double demand_or(double cold_start) const { return empty() ? cold_start : demand(); }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t window_seconds() const { return ring_.size(); }
  double percentile() const { return percentile_; }

  /// Retained samples, oldest first.
  std::vector<double> samples() const;

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::size_t size_ = 0;
  double percentile_;
};

}  // namespace affsim
