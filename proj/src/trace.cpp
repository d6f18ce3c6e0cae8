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

#include "affsim/trace.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "affsim/error.hpp"

namespace affsim {

namespace {

constexpr std::array<std::string_view, 8> kKindNames = {
    "wakeup", "dispatch", "preempt", "migrate", "complete", "balance_tick", "control_tick", "mask_update"};

constexpr std::array<std::string_view, 9> kFlagNames = {
    "preferred", "non_preferred", "crossed_llc", "queued", "running", "moved", "attract", "newidle", "horizon"};

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

EventKind event_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  throw ParseError("trace: unknown event kind '" + std::string(name) + "'");
}

std::string format_trace_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.time.count();
  j["ev"] = to_string(r.kind);
  if (r.thread >= 0) j["thread"] = r.thread;
  if (r.container >= 0) j["container"] = r.container;
  if (r.core >= 0) j["core"] = r.core;
  if (r.from_core >= 0) j["from"] = r.from_core;
  if (r.flags != 0) {
    auto& flags = j["flags"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < kFlagNames.size(); ++i)
      if (r.flags & (1U << i)) flags.push_back(kFlagNames[i]);
  }
  if (r.work != 0.0) j["work"] = r.work;
  if (r.kind == EventKind::mask_update) j["mask"] = r.mask;
  return j.dump();
}

TraceRecord parse_trace_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("trace: malformed record: ") + e.what());
  }
  TraceRecord r;
  try {
    r.time = SimTime{j.at("t").get<std::int64_t>()};
    r.kind = event_kind_from_string(j.at("ev").get<std::string>());
    r.thread = j.value("thread", -1);
    r.container = j.value("container", -1);
    r.core = j.value("core", -1);
    r.from_core = j.value("from", -1);
    r.work = j.value("work", 0.0);
    if (j.contains("flags")) {
      for (const auto& f : j.at("flags")) {
        auto name = f.get<std::string>();
        bool known = false;
        for (std::size_t i = 0; i < kFlagNames.size(); ++i) {
          if (kFlagNames[i] == name) {
            r.flags |= 1U << i;
            known = true;
          }
        }
        if (!known) throw ParseError("trace: unknown flag '" + name + "'");
      }
    }
    if (j.contains("mask")) r.mask = j.at("mask").get<std::vector<CoreId>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trace: bad record field: ") + e.what());
  }
  return r;
}

void JsonlTraceWriter::record(const TraceRecord& r) { out_ << format_trace_line(r) << '\n'; }

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_trace_line(line));
  return out;
}

}  // namespace affsim
