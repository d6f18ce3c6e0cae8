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

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "affsim/units.hpp"

namespace affsim {

/// Dense bitset over core ids. Iteration is always in ascending core order.
class CoreSet {
 public:
  CoreSet() = default;
  CoreSet(std::initializer_list<CoreId> cores) {
    for (CoreId c : cores) insert(c);
  }
  template <typename Range>
  static CoreSet of(const Range& cores) {
    CoreSet s;
    for (CoreId c : cores) s.insert(c);
    return s;
  }
  static CoreSet range(CoreId first, CoreId last_exclusive) {
    CoreSet s;
    for (CoreId c = first; c < last_exclusive; ++c) s.insert(c);
    return s;
  }

  void insert(CoreId c) {
    auto w = static_cast<std::size_t>(c) / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (static_cast<unsigned>(c) % 64);
  }
  void erase(CoreId c) {
    auto w = static_cast<std::size_t>(c) / 64;
    if (w < words_.size()) words_[w] &= ~(std::uint64_t{1} << (static_cast<unsigned>(c) % 64));
    trim();
  }
  bool contains(CoreId c) const {
    if (c < 0) return false;
    auto w = static_cast<std::size_t>(c) / 64;
    return w < words_.size() && ((words_[w] >> (static_cast<unsigned>(c) % 64)) & 1U) != 0;
  }
  bool empty() const { return words_.empty(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  CoreSet operator&(const CoreSet& o) const {
    CoreSet r;
    r.words_.resize(std::min(words_.size(), o.words_.size()));
    for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] = words_[i] & o.words_[i];
    r.trim();
    return r;
  }
  CoreSet operator|(const CoreSet& o) const {
    CoreSet r = words_.size() >= o.words_.size() ? *this : o;
    const CoreSet& small = words_.size() >= o.words_.size() ? o : *this;
    for (std::size_t i = 0; i < small.words_.size(); ++i) r.words_[i] |= small.words_[i];
    return r;
  }
  CoreSet operator-(const CoreSet& o) const {
    CoreSet r = *this;
    for (std::size_t i = 0; i < std::min(r.words_.size(), o.words_.size()); ++i) r.words_[i] &= ~o.words_[i];
    r.trim();
    return r;
  }
  bool intersects(const CoreSet& o) const {
    for (std::size_t i = 0; i < std::min(words_.size(), o.words_.size()); ++i)
      if ((words_[i] & o.words_[i]) != 0) return true;
    return false;
  }
  bool is_subset_of(const CoreSet& o) const { return (*this - o).empty(); }

  std::vector<CoreId> to_vector() const {
    std::vector<CoreId> out;
    for_each([&](CoreId c) { out.push_back(c); });
    return out;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        auto bit = std::countr_zero(bits);
        f(static_cast<CoreId>(w * 64 + static_cast<std::size_t>(bit)));
        bits &= bits - 1;
      }
    }
  }

  bool operator==(const CoreSet&) const = default;

 private:
  void trim() {
    while (!words_.empty() && words_.back() == 0) words_.pop_back();
  }
  std::vector<std::uint64_t> words_;
};

}  // namespace affsim
