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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "affsim/units.hpp"

namespace affsim {

enum class EventKind : std::uint8_t {
  wakeup,
  dispatch,
  preempt,
  migrate,
  complete,
  balance_tick,
  control_tick,
  mask_update,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

namespace trace_flags {
inline constexpr std::uint32_t kPreferred = 1U << 0;
inline constexpr std::uint32_t kNonPreferred = 1U << 1;
inline constexpr std::uint32_t kCrossedLlc = 1U << 2;
inline constexpr std::uint32_t kQueued = 1U << 3;    // wakeup queued / migrated thread was queued
inline constexpr std::uint32_t kRunning = 1U << 4;   // migrated thread was running
inline constexpr std::uint32_t kMoved = 1U << 5;     // dispatch on a core other than the last one run on
inline constexpr std::uint32_t kAttract = 1U << 6;   // migration toward an idle preferred core
inline constexpr std::uint32_t kNewIdle = 1U << 7;   // migration issued by a core that just went idle
inline constexpr std::uint32_t kHorizon = 1U << 8;   // slice closed at the end of the run
inline constexpr std::uint32_t kLastFlag = kHorizon;
}  // namespace trace_flags

/// One line of the execution trace. Slice-closing records (preempt, complete
/// of a running thread, migrate of a running thread) carry the productive work
/// retired during the slice.
struct TraceRecord {
  SimTime time{};
  EventKind kind = EventKind::wakeup;
  int thread = -1;
  int container = -1;
  CoreId core = -1;
  CoreId from_core = -1;
  std::uint32_t flags = 0;
  double work = 0.0;
  std::vector<CoreId> mask;  // mask_update only

  bool has(std::uint32_t flag) const { return (flags & flag) != 0; }
  bool operator==(const TraceRecord&) const = default;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void record(const TraceRecord& r) = 0;
};

class NullTraceSink final : public TraceSink {
 public:
  void record(const TraceRecord&) override {}
};

class TraceBuffer final : public TraceSink {
 public:
  void record(const TraceRecord& r) override { records_.push_back(r); }
  const std::vector<TraceRecord>& records() const { return records_; }

 private:
  std::vector<TraceRecord> records_;
};

/// Forwards every record to several sinks in order.
class FanoutSink final : public TraceSink {
 public:
  explicit FanoutSink(std::vector<TraceSink*> sinks) : sinks_(std::move(sinks)) {}
  void record(const TraceRecord& r) override {
    for (auto* s : sinks_) s->record(r);
  }

 private:
  std::vector<TraceSink*> sinks_;
};

/// Line-delimited JSON, one record per line.
std::string format_trace_line(const TraceRecord& r);
TraceRecord parse_trace_line(std::string_view line);

class JsonlTraceWriter final : public TraceSink {
 public:
  explicit JsonlTraceWriter(std::ostream& out) : out_(out) {}
  void record(const TraceRecord& r) override;

 private:
  std::ostream& out_;
};

std::vector<TraceRecord> read_trace(std::istream& in);

}  // namespace affsim
