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

#include "affsim/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "affsim/error.hpp"
#include "affsim/metrics.hpp"
#include "affsim/scenario.hpp"
#include "affsim/simulator.hpp"

namespace affsim {

namespace fs = std::filesystem;

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

std::string seed_name(const char* stem, std::uint64_t seed, const char* ext) {
  return std::string(stem) + "_seed" + std::to_string(seed) + ext;
}

MetricsReport run_one(const Scenario& sc, std::uint64_t seed, PolicyVariant variant, const fs::path& dir,
                      bool emit_trace) {
  const auto workload = sc.workload_for_seed(seed);
  const auto cfg = sc.sim_config(seed, variant);
  SimulationResult result;
  if (emit_trace) {
    std::ofstream trace(dir / seed_name("trace", seed, ".jsonl"), std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace into '" + dir.string() + "'");
    JsonlTraceWriter writer(trace);
    result = run_simulation(sc.topology, workload, cfg, &writer);
  } else {
    result = run_simulation(sc.topology, workload, cfg);
  }
  result.report.config["scenario"] = scenario_to_json(sc);
  write_file(dir / seed_name("report", seed, ".json"), report_to_json(result.report).dump(2) + "\n");
  return result.report;
}

Scenario prepare(const RunOptions& opts) {
  Scenario sc = load_scenario(opts.scenario);
  if (opts.seeds) {
    if (opts.seeds->empty()) throw ParseError("--seeds: expected at least one seed");
    sc.seeds = *opts.seeds;
  }
  return sc;
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = prepare(opts);
    make_dir(opts.out_dir);
    for (auto seed : sc.seeds) {
      const auto rep = run_one(sc, seed, sc.policy.variant, opts.out_dir, opts.emit_trace);
      log << "seed " << seed << ": throughput_per_cpu=" << rep.throughput_per_cpu
          << " pcr=" << (rep.aggregate_pcr ? std::to_string(*rep.aggregate_pcr) : "n/a") << '\n';
    }
    return kExitOk;
  });
}

int cmd_compare(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = prepare(opts);
    const fs::path base_dir = opts.out_dir / "baseline";
    const fs::path cas_dir = opts.out_dir / "cas";
    make_dir(base_dir);
    make_dir(cas_dir);
    std::vector<MetricsReport> base, cas;
    nlohmann::json per_seed = nlohmann::json::array();
    for (auto seed : sc.seeds) {
      base.push_back(run_one(sc, seed, PolicyVariant::baseline, base_dir, opts.emit_trace));
      cas.push_back(run_one(sc, seed, PolicyVariant::cas, cas_dir, opts.emit_trace));
      const auto deltas = compare_reports(base.back(), cas.back());
      write_file(opts.out_dir / seed_name("compare", seed, ".json"), deltas_to_json(deltas).dump(2) + "\n");
      write_file(opts.out_dir / seed_name("compare", seed, ".csv"), deltas_to_csv(deltas));
      per_seed.push_back({{"seed", seed}, {"deltas", deltas_to_json(deltas)}});
    }
    const auto agg = aggregate_comparison(base, cas);
    nlohmann::json summary{{"a", "baseline"}, {"b", "cas"}, {"per_seed", per_seed}, {"aggregate", aggregate_to_json(agg)}};
    write_file(opts.out_dir / "compare_summary.json", summary.dump(2) + "\n");
    log << "aggregate over " << agg.seeds << " seed(s): " << aggregate_to_json(agg).dump() << '\n';
    return kExitOk;
  });
}

std::vector<DemandRequest> read_demands(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("demands: cannot open '" + path.string() + "'");
  std::vector<DemandRequest> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line == "container_id,demand") continue;
    const auto comma = line.find(',');
    const std::string where = "demands: row " + std::to_string(row) + ": ";
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError(where + "expected 'container_id,demand'");
    const std::string id = line.substr(0, comma);
    if (id.empty()) throw ParseError(where + "field container_id is empty");
    const std::string text = line.substr(comma + 1);
    double demand = 0.0;
    std::size_t used = 0;
    try {
      demand = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(demand))
      throw ParseError(where + "field demand is not a number ('" + text + "')");
    if (demand < 0.0) throw ParseError(where + "field demand is negative");
    out.push_back(DemandRequest{id, CpuUnits::from_double(demand), {}});
  }
  return out;
}

int cmd_allocate(const std::string& topology, const fs::path& demands, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto topo = build_topology(topology);
    const auto requests = read_demands(demands);
    out << plan_to_json(allocate_for_topology(requests, topo)).dump(2) << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"affsim: soft-affinity scheduling simulator"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::vector<std::uint64_t> seeds;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", run_opts.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", run_opts.out_dir, "Output directory")->required();
    sub->add_flag("--emit-trace", run_opts.emit_trace, "Write a JSONL trace per run");
    sub->add_option("--seeds", seeds, "Seeds overriding the scenario list")->delimiter(',');
  };
  auto* run = app.add_subcommand("run", "Run the scenario's policy once per seed");
  add_common(run);
  auto* compare = app.add_subcommand("compare", "Run baseline and core-aware policies per seed and compare");
  add_common(compare);
  auto* allocate = app.add_subcommand("allocate", "Print the preferred-core plan for a set of demands");
  std::string topology;
  fs::path demands;
  allocate->add_option("--topology", topology, "Topology as SxDxC, e.g. 1x4x8")->required();
  allocate->add_option("--demands", demands, "CSV with header container_id,demand")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!seeds.empty()) run_opts.seeds = seeds;
  if (run->parsed()) return cmd_run(run_opts, out, err);
  if (compare->parsed()) return cmd_compare(run_opts, out, err);
  return cmd_allocate(topology, demands, out, err);
}

}  // namespace affsim
