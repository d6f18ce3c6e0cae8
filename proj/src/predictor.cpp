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

#include "affsim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "affsim/error.hpp"

namespace affsim {

std::size_t nearest_rank(double percentile, std::size_t n) {
  // Percentiles are usually integral; the small slack keeps p*n/100 from
  // rounding up past an exact integer.
  const double raw = percentile * static_cast<double>(n) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(rank, 1, n);
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw ColdStartError("percentile of an empty sample set");
  std::vector<double> work(values.begin(), values.end());
  auto k = nearest_rank(percentile, work.size()) - 1;
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
  return work[k];
}

DemandHistory::DemandHistory(double percentile, std::size_t window_seconds)
    : ring_(window_seconds), percentile_(percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0))
    throw ValidationError("predictor: percentile must be in (0, 100], got " + std::to_string(percentile));
  if (window_seconds == 0) throw ValidationError("predictor: window must hold at least one sample");
}

void DemandHistory::record_sample(double usage) {
  if (!(usage >= 0.0)) throw ValidationError("predictor: negative usage sample " + std::to_string(usage));
  if (size_ < ring_.size()) {
    ring_[(head_ + size_) % ring_.size()] = usage;
    ++size_;
  } else {
    ring_[head_] = usage;
    head_ = (head_ + 1) % ring_.size();
  }
}

double DemandHistory::demand() const {
  if (empty()) throw ColdStartError("predictor: no utilization samples recorded yet");
  auto s = samples();
  return nearest_rank_percentile(s, percentile_);
}

std::vector<double> DemandHistory::samples() const {
  std::vector<double> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
  return out;
}

}  // namespace affsim
