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

#include "affsim/simulator.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <random>
#include <sstream>

#include "affsim/allocator.hpp"
#include "affsim/error.hpp"
#include "affsim/predictor.hpp"
#include "affsim/sched_state.hpp"

namespace affsim {

using namespace trace_flags;

void SchedPolicy::validate() const {
  if (load_balance_interval <= SimTime::zero()) throw ValidationError("policy: load_balance_interval must be > 0");
  if (control_interval <= SimTime::zero()) throw ValidationError("policy: control_interval must be > 0");
  if (time_slice <= SimTime::zero()) throw ValidationError("policy: time_slice must be > 0");
}

void PredictorConfig::validate() const {
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ValidationError("policy: percentile must be in (0, 100]");
  if (window_seconds < 1) throw ValidationError("policy: window_seconds must be >= 1");
}

nlohmann::json sim_config_to_json(const SimConfig& c, const MachineTopology& topo,
                                  const std::vector<ContainerSpec>& workload) {
  return {
      {"topology", topology_to_json(topo)},
      {"horizon_s", to_seconds(c.horizon)},
      {"seed", c.seed},
      {"policy",
       {{"variant", std::string(to_string(c.policy.variant))},
        {"load_balance_interval_ms", static_cast<double>(c.policy.load_balance_interval.count()) * 1e-6},
        {"control_interval_s", to_seconds(c.policy.control_interval)},
        {"time_slice_ms", static_cast<double>(c.policy.time_slice.count()) * 1e-6},
        {"percentile", c.predictor.percentile},
        {"window_seconds", c.predictor.window_seconds},
        {"reserved_cores", c.reserved_cores.to_vector()}}},
      {"cost_model", warmth_params_to_json(c.cost)},
      {"workload", workload_to_json(workload)},
  };
}

namespace {

constexpr SimTime kSecond = std::chrono::seconds{1};

enum class Ev : std::uint8_t { sample, control, level, arrival, block, slice, balance };

struct Event {
  SimTime time;
  int prio;
  std::uint64_t seq;
  Ev type;
  int target;
  std::uint64_t token;
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (prio != o.prio) return prio > o.prio;
    return seq > o.seq;
  }
};

int priority_of(Ev e) {
  switch (e) {
    case Ev::sample:
      return 0;
    case Ev::control:
      return 1;
    default:
      return 2;
  }
}

std::string at_time(SimTime t) {
  std::ostringstream s;
  s << "at t=" << to_seconds(t) << "s: ";
  return s.str();
}

class Simulator final : public SchedObserver {
 public:
  Simulator(const MachineTopology& topo, const std::vector<ContainerSpec>& specs, const SimConfig& cfg, TraceSink* extra)
      : topo_(topo),
        specs_(specs),
        cfg_(cfg),
        state_(topo, make_containers(specs)),
        warmth_(topo.total_cores(), static_cast<int>(specs.size())),
        metrics_(topo, ids(specs)),
        extra_(extra) {
    const auto n = specs.size();
    const auto cores = static_cast<std::size_t>(topo.total_cores());
    for (const auto& s : specs) {
      procs_.emplace_back(s);
      rngs_.emplace_back(splitmix64(s.stream_seed ^ splitmix64(cfg.seed ^ 0x7468726561647300ULL)));
      histories_.emplace_back(cfg.predictor.percentile, static_cast<std::size_t>(cfg.predictor.window_seconds));
    }
    arrival_token_.assign(n, 0);
    idle_threads_.resize(n);
    usage_ns_.assign(n, 0);
    usage_.resize(n);
    slice_start_.assign(cores, SimTime{0});
    accounted_.assign(cores, SimTime{0});
    slice_token_.assign(cores, 0);
    state_.set_observer(this);
  }

  SimulationResult run() {
    guarded(SimTime{0}, [&] {
      control_tick();
      for (std::size_t i = 0; i < specs_.size(); ++i) {
        const int initial = sample_parallelism(procs_[i], SimTime{0}, rngs_[i]);
        for (int k = 0; k < initial; ++k) wake(static_cast<int>(i));
        level_change(static_cast<int>(i));
      }
      settle(state_, cfg_.policy.variant);
    });
    push(kSecond, Ev::sample, -1, 0);
    push(cfg_.policy.control_interval, Ev::control, -1, 0);
    push(cfg_.policy.load_balance_interval, Ev::balance, -1, 0);

    while (!events_.empty()) {
      const Event e = events_.top();
      if (e.time > cfg_.horizon || (e.time == cfg_.horizon && e.type != Ev::sample)) break;
      events_.pop();
      guarded(e.time, [&] {
        handle(e);
        if (state_.queued_count() > 0) settle(state_, cfg_.policy.variant);
      });
    }
    now_ = cfg_.horizon;
    state_.now = now_;
    close_at_horizon();

    SimulationResult result;
    result.report = metrics_.finish(cfg_.horizon);
    result.report.config = sim_config_to_json(cfg_, topo_, specs_);
    result.usage_per_second = std::move(usage_);
    return result;
  }

  void on_dispatch(CoreId core, int t) override {
    const auto& th = state_.thread(t);
    std::uint32_t flags = state_.is_preferred(t, core) ? kPreferred : kNonPreferred;
    const CoreId last = th.last_run_core;
    if (last >= 0 && last != core) {
      flags |= kMoved;
      if (!topo_.same_llc(last, core)) flags |= kCrossedLlc;
      state_.thread(t).penalty_debt += migration_cost(last, core, topo_, cfg_.cost);
    }
    const auto c = static_cast<std::size_t>(core);
    slice_start_[c] = now_;
    accounted_[c] = now_;
    push(now_ + cfg_.policy.time_slice, Ev::slice, core, ++slice_token_[c]);
    emit({now_, EventKind::dispatch, t, th.container, core, last, flags, 0.0, {}});
  }

  void on_slice_end(CoreId core, int t, EventKind kind, CoreId to, std::uint32_t flags) override {
    const double work = account_slice(core, t);
    ++slice_token_[static_cast<std::size_t>(core)];
    TraceRecord r{now_, kind, t, state_.thread(t).container, core, -1, flags, work, {}};
    if (kind == EventKind::migrate) {
      r.core = to;
      r.from_core = core;
      r.flags |= kRunning;
      if (!topo_.same_llc(core, to)) r.flags |= kCrossedLlc;
    }
    emit(std::move(r));
  }

  void on_queued_migrate(int t, CoreId from, CoreId to, std::uint32_t flags) override {
    std::uint32_t f = flags | kQueued;
    if (!topo_.same_llc(from, to)) f |= kCrossedLlc;
    emit({now_, EventKind::migrate, t, state_.thread(t).container, to, from, f, 0.0, {}});
  }

  void on_queued_complete(int t, CoreId core) override {
    emit({now_, EventKind::complete, t, state_.thread(t).container, core, -1, kQueued, 0.0, {}});
  }

 private:
  static std::vector<ContainerSched> make_containers(const std::vector<ContainerSpec>& specs) {
    std::vector<ContainerSched> out;
    for (const auto& s : specs) out.push_back(ContainerSched{s.container_id, s.runnable_cpuset, {}});
    return out;
  }
  static std::vector<std::string> ids(const std::vector<ContainerSpec>& specs) {
    std::vector<std::string> out;
    for (const auto& s : specs) out.push_back(s.container_id);
    return out;
  }

  template <typename F>
  void guarded(SimTime t, F&& f) {
    now_ = t;
    state_.now = t;
    try {
      f();
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& ex) {
      throw SimulationError(at_time(t) + ex.what());
    }
  }

  void push(SimTime t, Ev type, int target, std::uint64_t token) {
    events_.push(Event{t, priority_of(type), seq_++, type, target, token});
  }

  void emit(TraceRecord r) {
    metrics_.record(r);
    if (extra_) extra_->record(r);
  }

  /// Closes the accounting of the slice running on `core`; returns productive work.
  double account_slice(CoreId core, int t) {
    const auto c = static_cast<std::size_t>(core);
    const int container = state_.thread(t).container;
    const SimTime dt = now_ - slice_start_[c];
    const double gross = work_retired(warmth_.get(core, container), dt, cfg_.cost);
    warmth_.on_run(core, container, dt, cfg_.cost);
    auto& debt = state_.thread(t).penalty_debt;
    const double paid = std::min(debt, gross);
    debt -= paid;
    usage_ns_[static_cast<std::size_t>(container)] += (now_ - accounted_[c]).count();
    accounted_[c] = now_;
    return gross - paid;
  }

  void handle(const Event& e) {
    switch (e.type) {
      case Ev::sample:
        sample_tick();
        if (now_ + kSecond <= cfg_.horizon) push(now_ + kSecond, Ev::sample, -1, 0);
        break;
      case Ev::control:
        control_tick();
        push(now_ + cfg_.policy.control_interval, Ev::control, -1, 0);
        break;
      case Ev::balance:
        emit({now_, EventKind::balance_tick, -1, -1, -1, -1, 0, 0.0, {}});
        load_balance(state_, cfg_.policy.variant);
        push(now_ + cfg_.policy.load_balance_interval, Ev::balance, -1, 0);
        break;
      case Ev::level:
        level_change(e.target);
        break;
      case Ev::arrival:
        if (e.token != arrival_token_[static_cast<std::size_t>(e.target)]) break;
        wake(e.target);
        schedule_arrival(e.target);
        break;
      case Ev::block: {
        const auto& th = state_.thread(e.target);
        if (th.generation != e.token || th.state == ThreadState::blocked) break;
        const int container = th.container;
        const CoreId freed = th.state == ThreadState::running ? th.core : -1;
        state_.block(e.target);
        idle_threads_[static_cast<std::size_t>(container)].push_back(e.target);
        if (freed >= 0 && !state_.core(freed).run_queue.empty()) state_.dispatch_next(freed);
        break;
      }
      case Ev::slice: {
        const auto c = static_cast<std::size_t>(e.target);
        if (e.token != slice_token_[c]) break;
        auto& core = state_.core(e.target);
        if (core.run_queue.empty()) {
          push(now_ + cfg_.policy.time_slice, Ev::slice, e.target, ++slice_token_[c]);
        } else {
          state_.preempt(e.target);
          state_.dispatch_next(e.target);
        }
        break;
      }
    }
  }

  void wake(int container) {
    auto& pool = idle_threads_[static_cast<std::size_t>(container)];
    int t;
    if (pool.empty()) {
      t = state_.add_thread(container);
    } else {
      t = pool.front();
      pool.pop_front();
    }
    const Placement p = on_wakeup(state_, t, cfg_.policy.variant);
    std::uint32_t flags = state_.is_preferred(t, p.core) ? kPreferred : kNonPreferred;
    if (p.kind == PlacementKind::queued) flags |= kQueued;
    emit({now_, EventKind::wakeup, t, container, p.core, -1, flags, 0.0, {}});
    apply_placement(state_, t, p);

    auto& rng = rngs_[static_cast<std::size_t>(container)];
    const double mean_ns = specs_[static_cast<std::size_t>(container)].process.mean_runnable_us * 1e3;
    std::exponential_distribution<double> period(1.0 / mean_ns);
    const SimTime runnable{std::max<std::int64_t>(1, std::llround(period(rng)))};
    push(now_ + runnable, Ev::block, t, state_.thread(t).generation);
  }

  void schedule_arrival(int container) {
    const auto i = static_cast<std::size_t>(container);
    const double level = procs_[i].level_at(now_);
    if (level <= 0.0) return;
    const double mean_ns = specs_[i].process.mean_runnable_us * 1e3;
    std::exponential_distribution<double> gap(level / mean_ns);
    const SimTime dt{std::max<std::int64_t>(1, std::llround(gap(rngs_[i])))};
    push(now_ + dt, Ev::arrival, container, arrival_token_[i]);
  }

  void level_change(int container) {
    const auto i = static_cast<std::size_t>(container);
    ++arrival_token_[i];
    schedule_arrival(container);
    const SimTime next = procs_[i].next_change_after(now_);
    if (next != kNever && next < cfg_.horizon) push(next, Ev::level, container, 0);
  }

  void sample_tick() {
    for (const auto& core : state_.cores) {
      if (core.idle()) continue;
      const auto c = static_cast<std::size_t>(core.core_id);
      usage_ns_[static_cast<std::size_t>(state_.thread(core.occupant).container)] += (now_ - accounted_[c]).count();
      accounted_[c] = now_;
    }
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const double usage = static_cast<double>(usage_ns_[i]) / static_cast<double>(kSecond.count());
      usage_[i].push_back(usage);
      histories_[i].record_sample(usage);
      usage_ns_[i] = 0;
    }
  }

  void control_tick() {
    emit({now_, EventKind::control_tick, -1, -1, -1, -1, 0, 0.0, {}});
    std::vector<DemandRequest> requests;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const double demand = histories_[i].demand_or(specs_[i].requested_limit);
      requests.push_back(DemandRequest{specs_[i].container_id, CpuUnits::from_double(demand), specs_[i].runnable_cpuset});
    }
    const AllocationPlan plan = allocate_for_topology(requests, topo_, cfg_.reserved_cores);
    for (int changed : apply_assignment(state_, plan)) {
      const auto& mask = state_.containers[static_cast<std::size_t>(changed)].preferred;
      emit({now_, EventKind::mask_update, -1, changed, -1, -1, 0, 0.0, mask.to_vector()});
    }
  }

  void close_at_horizon() {
    for (const auto& core : state_.cores) {
      if (core.idle()) continue;
      const int t = core.occupant;
      const double work = account_slice(core.core_id, t);
      emit({now_, EventKind::preempt, t, state_.thread(t).container, core.core_id, -1, kHorizon, work, {}});
    }
  }

  const MachineTopology& topo_;
  const std::vector<ContainerSpec>& specs_;
  const SimConfig& cfg_;
  SchedState state_;
  WarmthLedger warmth_;
  MetricsAccumulator metrics_;
  TraceSink* extra_;

  SimTime now_{0};
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;

  std::vector<UtilizationProcess> procs_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<DemandHistory> histories_;
  std::vector<std::uint64_t> arrival_token_;
  std::vector<std::deque<int>> idle_threads_;  // blocked threads, longest-blocked first
  std::vector<std::int64_t> usage_ns_;
  std::vector<std::vector<double>> usage_;
  std::vector<SimTime> slice_start_;
  std::vector<SimTime> accounted_;
  std::vector<std::uint64_t> slice_token_;
};

}  // namespace

SimulationResult run_simulation(const MachineTopology& topo, const std::vector<ContainerSpec>& workload,
                                const SimConfig& config, TraceSink* trace) {
  config.policy.validate();
  config.predictor.validate();
  config.cost.validate();
  if (config.horizon <= SimTime::zero()) throw ValidationError("horizon must be > 0");
  for (const auto& s : workload) {
    if (s.runnable_cpuset.empty() || !s.runnable_cpuset.is_subset_of(topo.all_cores()))
      throw ValidationError("container '" + s.container_id + "': runnable cpuset must be a non-empty subset of the machine");
  }
  Simulator sim(topo, workload, config, trace);
  return sim.run();
}

}  // namespace affsim
