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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "affsim/allocator.hpp"
#include "affsim/topology.hpp"

namespace affsim {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct RunOptions {
  std::filesystem::path scenario;
  std::filesystem::path out_dir;
  bool emit_trace = false;
  /// Replaces the scenario's seed list when set.
  std::optional<std::vector<std::uint64_t>> seeds;
};

/// Writes report_seed<N>.json (and trace_seed<N>.jsonl) per seed.
int cmd_run(const RunOptions& opts, std::ostream& log, std::ostream& err);
/// Runs baseline then core-aware per seed into baseline/ and cas/, writes
/// per-seed deltas as compare_seed<N>.{json,csv} and compare_summary.json.
int cmd_compare(const RunOptions& opts, std::ostream& log, std::ostream& err);
/// Prints the plan for `container_id,demand` rows on the given topology.
int cmd_allocate(const std::string& topology, const std::filesystem::path& demands, std::ostream& out,
                 std::ostream& err);

std::vector<DemandRequest> read_demands(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace affsim
