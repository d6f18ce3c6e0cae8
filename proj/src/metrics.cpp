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

#include "affsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "affsim/error.hpp"
#include "affsim/predictor.hpp"

namespace affsim {

using namespace trace_flags;

namespace {

bool closes_slice(const TraceRecord& r) {
  switch (r.kind) {
    case EventKind::preempt:
      return true;
    case EventKind::complete:
      return !r.has(kQueued);
    case EventKind::migrate:
      return r.has(kRunning);
    default:
      return false;
  }
}

CoreId slice_core(const TraceRecord& r) { return r.kind == EventKind::migrate ? r.from_core : r.core; }

std::optional<double> ratio(SimTime num, SimTime den) {
  if (den.count() == 0) return std::nullopt;
  return static_cast<double>(num.count()) / static_cast<double>(den.count());
}

}  // namespace

SimTime latency_percentile(std::span<const SimTime> latencies, double p) {
  if (latencies.empty()) throw ValidationError("scheduling latency: no wakeups recorded");
  std::vector<SimTime> v(latencies.begin(), latencies.end());
  auto nth = v.begin() + static_cast<std::ptrdiff_t>(nearest_rank(p, v.size()) - 1);
  std::nth_element(v.begin(), nth, v.end());
  return *nth;
}

MetricsAccumulator::MetricsAccumulator(const MachineTopology& topo, std::vector<std::string> ids)
    : topo_(&topo), masks_(ids.size()), slices_(static_cast<std::size_t>(topo.total_cores())) {
  for (auto& id : ids) {
    ContainerMetrics m;
    m.container_id = std::move(id);
    containers_.push_back(std::move(m));
  }
}

std::vector<int>& MetricsAccumulator::grow(std::vector<int>& v, int thread, int fill) {
  if (static_cast<std::size_t>(thread) >= v.size()) v.resize(static_cast<std::size_t>(thread) + 1, fill);
  return v;
}

void MetricsAccumulator::close_slice(CoreId core, SimTime end, double work) {
  auto& slot = slices_.at(static_cast<std::size_t>(core));
  if (!slot) throw SimulationError("metrics: slice closed on idle core " + std::to_string(core));
  auto& c = containers_.at(static_cast<std::size_t>(slot->container));
  const SimTime dt = end - slot->start;
  c.cpu_time_total += dt;
  if (slot->preferred) c.cpu_time_preferred += dt;
  c.completed_work += work;
  slot.reset();
}

void MetricsAccumulator::record(const TraceRecord& r) {
  const auto th = static_cast<std::size_t>(r.thread < 0 ? 0 : r.thread);
  if (r.thread >= 0) {
    grow(last_core_, r.thread, -1);
    grow(pending_, r.thread, 0);
    if (th >= wake_time_.size()) wake_time_.resize(th + 1);
  }
  switch (r.kind) {
    case EventKind::mask_update:
      masks_.at(static_cast<std::size_t>(r.container)) = CoreSet::of(r.mask);
      return;
    case EventKind::wakeup:
      containers_.at(static_cast<std::size_t>(r.container)).wakeup_count++;
      pending_[th] = 1;
      wake_time_[th] = r.time;
      return;
    case EventKind::dispatch: {
      if (pending_[th]) {
        latencies_.push_back(r.time - wake_time_[th]);
        pending_[th] = 0;
      }
      ++switches_;
      const CoreId last = last_core_[th];
      if (last >= 0 && last != r.core) {
        ++migrations_;
        if (!topo_->same_llc(last, r.core)) ++cross_;
      }
      last_core_[th] = r.core;
      auto& slot = slices_.at(static_cast<std::size_t>(r.core));
      if (slot) throw SimulationError("metrics: dispatch onto busy core " + std::to_string(r.core));
      slot = Slice{r.time, r.container, masks_.at(static_cast<std::size_t>(r.container)).contains(r.core)};
      return;
    }
    default:
      break;
  }
  if (closes_slice(r)) {
    close_slice(slice_core(r), r.time, r.work);
  } else if (r.kind == EventKind::complete && pending_[th]) {
    latencies_.push_back(r.time - wake_time_[th]);
    pending_[th] = 0;
  }
}

MetricsReport MetricsAccumulator::finish(SimTime horizon) const {
  MetricsReport rep;
  rep.containers = containers_;
  rep.cores = topo_->total_cores();
  rep.horizon = horizon;
  SimTime preferred{0};
  for (auto& c : rep.containers) {
    c.pcr = ratio(c.cpu_time_preferred, c.cpu_time_total);
    rep.completed_work += c.completed_work;
    rep.busy_time += c.cpu_time_total;
    preferred += c.cpu_time_preferred;
    rep.wakeups += c.wakeup_count;
  }
  rep.aggregate_pcr = ratio(preferred, rep.busy_time);
  if (rep.cores > 0 && horizon.count() > 0)
    rep.throughput_per_cpu = rep.completed_work / (static_cast<double>(rep.cores) * static_cast<double>(horizon.count()));
  if (!latencies_.empty()) {
    rep.latency_p50 = latency_percentile(latencies_, 50);
    rep.latency_p90 = latency_percentile(latencies_, 90);
    rep.latency_p99 = latency_percentile(latencies_, 99);
  }
  rep.migrations_total = migrations_;
  rep.migrations_cross_llc = cross_;
  rep.context_switches = switches_;
  return rep;
}

std::optional<double> compute_pcr(std::span<const TraceRecord> trace, int container) {
  CoreSet mask;
  std::vector<std::pair<CoreId, SimTime>> open;  // (core, start) of this container's running slices
  std::vector<char> open_pref;
  SimTime total{0}, preferred{0};
  for (const auto& r : trace) {
    if (r.container != container) continue;
    if (r.kind == EventKind::mask_update) {
      mask = CoreSet::of(r.mask);
    } else if (r.kind == EventKind::dispatch) {
      open.emplace_back(r.core, r.time);
      open_pref.push_back(mask.contains(r.core) ? 1 : 0);
    } else if (closes_slice(r)) {
      const CoreId core = slice_core(r);
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].first != core) continue;
        const SimTime dt = r.time - open[i].second;
        total += dt;
        if (open_pref[i]) preferred += dt;
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(i));
        open_pref.erase(open_pref.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
  return ratio(preferred, total);
}

SimTime sched_latency_percentile(std::span<const TraceRecord> trace, double p) {
  std::vector<SimTime> wake;
  std::vector<char> pending;
  std::vector<SimTime> lat;
  for (const auto& r : trace) {
    if (r.thread < 0) continue;
    const auto t = static_cast<std::size_t>(r.thread);
    if (t >= wake.size()) {
      wake.resize(t + 1);
      pending.resize(t + 1, 0);
    }
    const bool settles = r.kind == EventKind::dispatch || (r.kind == EventKind::complete && r.has(kQueued));
    if (r.kind == EventKind::wakeup) {
      wake[t] = r.time;
      pending[t] = 1;
    } else if (settles && pending[t]) {
      lat.push_back(r.time - wake[t]);
      pending[t] = 0;
    }
  }
  return latency_percentile(lat, p);
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
nlohmann::json opt_us(const std::optional<SimTime>& v) {
  return v ? nlohmann::json(to_micros(*v)) : nlohmann::json(nullptr);
}
std::optional<double> opt_us_value(const std::optional<SimTime>& v) {
  return v ? std::optional<double>(to_micros(*v)) : std::nullopt;
}

}  // namespace

nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["config"] = r.config;
  nlohmann::ordered_json machine;
  machine["cores"] = r.cores;
  machine["horizon_s"] = to_seconds(r.horizon);
  machine["completed_work"] = r.completed_work;
  machine["throughput_per_cpu"] = r.throughput_per_cpu;
  machine["busy_time_s"] = to_seconds(r.busy_time);
  machine["aggregate_pcr"] = opt_json(r.aggregate_pcr);
  machine["wakeups"] = r.wakeups;
  machine["sched_latency_p50_us"] = opt_us(r.latency_p50);
  machine["sched_latency_p90_us"] = opt_us(r.latency_p90);
  machine["sched_latency_p99_us"] = opt_us(r.latency_p99);
  machine["migrations_total"] = r.migrations_total;
  machine["migrations_cross_llc"] = r.migrations_cross_llc;
  machine["context_switches"] = r.context_switches;
  j["machine"] = machine;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : r.containers) {
    nlohmann::ordered_json cj;
    cj["container_id"] = c.container_id;
    cj["cpu_time_total_s"] = to_seconds(c.cpu_time_total);
    cj["cpu_time_preferred_s"] = to_seconds(c.cpu_time_preferred);
    cj["pcr"] = opt_json(c.pcr);
    cj["completed_work"] = c.completed_work;
    cj["wakeup_count"] = c.wakeup_count;
    arr.push_back(std::move(cj));
  }
  j["containers"] = arr;
  return j;
}

std::vector<MetricDelta> compare_reports(const MetricsReport& a, const MetricsReport& b) {
  auto strip = [](nlohmann::json c) {
    if (c.contains("policy") && c["policy"].is_object()) c["policy"].erase("variant");
    return c;
  };
  if (strip(a.config) != strip(b.config) || a.cores != b.cores || a.horizon != b.horizon)
    throw ValidationError("compare: reports come from different configurations");
  std::vector<MetricDelta> out;
  auto add = [&](std::string name, std::optional<double> va, std::optional<double> vb) {
    MetricDelta d{std::move(name), va, vb, std::nullopt};
    if (va && vb && *va != 0.0) d.relative = (*vb - *va) / *va;
    out.push_back(std::move(d));
  };
  auto num = [](auto v) { return std::optional<double>(static_cast<double>(v)); };
  add("throughput_per_cpu", num(a.throughput_per_cpu), num(b.throughput_per_cpu));
  add("completed_work", num(a.completed_work), num(b.completed_work));
  add("sched_latency_p50_us", opt_us_value(a.latency_p50), opt_us_value(b.latency_p50));
  add("sched_latency_p90_us", opt_us_value(a.latency_p90), opt_us_value(b.latency_p90));
  add("sched_latency_p99_us", opt_us_value(a.latency_p99), opt_us_value(b.latency_p99));
  add("migrations_total", num(a.migrations_total), num(b.migrations_total));
  add("migrations_cross_llc", num(a.migrations_cross_llc), num(b.migrations_cross_llc));
  add("context_switches", num(a.context_switches), num(b.context_switches));
  add("aggregate_pcr", a.aggregate_pcr, b.aggregate_pcr);
  return out;
}

nlohmann::json deltas_to_json(std::span<const MetricDelta> deltas) {
  auto arr = nlohmann::json::array();
  for (const auto& d : deltas)
    arr.push_back({{"metric", d.metric}, {"a", opt_json(d.a)}, {"b", opt_json(d.b)}, {"relative", opt_json(d.relative)}});
  return arr;
}

std::string deltas_to_csv(std::span<const MetricDelta> deltas) {
  std::ostringstream out;
  out.precision(17);
  auto cell = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  out << "metric,a,b,relative\n";
  for (const auto& d : deltas) {
    out << d.metric << ',';
    cell(d.a);
    out << ',';
    cell(d.b);
    out << ',';
    cell(d.relative);
    out << '\n';
  }
  return out.str();
}

ComparisonAggregate aggregate_comparison(std::span<const MetricsReport> a, std::span<const MetricsReport> b) {
  if (a.size() != b.size()) throw ValidationError("compare: unequal numbers of paired reports");
  ComparisonAggregate agg;
  agg.seeds = a.size();
  double log_tp = 0.0, log_p99 = 0.0;
  std::size_t tp_n = 0, p99_n = 0;
  SimTime pref{0}, total{0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    (void)compare_reports(a[i], b[i]);
    if (a[i].throughput_per_cpu > 0.0 && b[i].throughput_per_cpu > 0.0) {
      log_tp += std::log(b[i].throughput_per_cpu / a[i].throughput_per_cpu);
      ++tp_n;
    }
    if (a[i].latency_p99 && b[i].latency_p99 && a[i].latency_p99->count() > 0 && b[i].latency_p99->count() > 0) {
      log_p99 += std::log(static_cast<double>(b[i].latency_p99->count()) / static_cast<double>(a[i].latency_p99->count()));
      ++p99_n;
    }
    agg.cross_llc_a += a[i].migrations_cross_llc;
    agg.cross_llc_b += b[i].migrations_cross_llc;
    for (const auto& c : b[i].containers) {
      pref += c.cpu_time_preferred;
      total += c.cpu_time_total;
    }
  }
  if (tp_n > 0) agg.throughput_ratio_geomean = std::exp(log_tp / static_cast<double>(tp_n));
  if (p99_n > 0) agg.p99_latency_ratio_geomean = std::exp(log_p99 / static_cast<double>(p99_n));
  if (agg.cross_llc_a > 0)
    agg.cross_llc_reduction = 1.0 - static_cast<double>(agg.cross_llc_b) / static_cast<double>(agg.cross_llc_a);
  agg.pcr_b = ratio(pref, total);
  return agg;
}

nlohmann::json aggregate_to_json(const ComparisonAggregate& agg) {
  auto delta = [](const std::optional<double>& r) { return r ? nlohmann::json(*r - 1.0) : nlohmann::json(nullptr); };
  return {
      {"seeds", agg.seeds},
      {"throughput_ratio_geomean", opt_json(agg.throughput_ratio_geomean)},
      {"throughput_delta", delta(agg.throughput_ratio_geomean)},
      {"p99_latency_ratio_geomean", opt_json(agg.p99_latency_ratio_geomean)},
      {"p99_latency_delta", delta(agg.p99_latency_ratio_geomean)},
      {"cross_llc_migrations_a", agg.cross_llc_a},
      {"cross_llc_migrations_b", agg.cross_llc_b},
      {"cross_llc_reduction", opt_json(agg.cross_llc_reduction)},
      {"pcr_b", opt_json(agg.pcr_b)},
  };
}

}  // namespace affsim
