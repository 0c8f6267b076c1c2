#pragma once

#include <chrono>
#include <functional>
#include <utility>

#include "dwsrp/alns.hpp"
#include "dwsrp/construct.hpp"
#include "dwsrp/core.hpp"
#include "dwsrp/instgen.hpp"

namespace dwsrp {

enum class SolverKind { CH, ALNS };

// Reoptimization policy for one simulated day.
struct Strategy {
  int beta_task = 5;        // fire after this many new tasks
  double beta_time = 60.0;  // ... or this many minutes since the last epoch
  double frozen_len = 30.0; // f
  SolverKind solver = SolverKind::ALNS;

  void validate() const {
    if (beta_task < 1) throw std::invalid_argument("beta_task must be >= 1");
    if (!(beta_time > 0)) throw std::invalid_argument("beta_time must be positive");
    if (frozen_len < 0) throw std::invalid_argument("frozen period must be non-negative");
  }
};

// True iff a reoptimization is due. A timer expiry with nothing new to plan
// does not fire.
inline bool trigger_fires(int new_since_last, double elapsed_since_last, const Strategy& strategy) {
  if (new_since_last >= strategy.beta_task) return true;
  return elapsed_since_last >= strategy.beta_time && new_since_last >= 1;
}

// One task of the committed day plan, with its scheduled times.
struct PlannedVisit {
  int task_id{};
  double start{};
  double completion{};
};

// What an epoch's frozen-period pass yields: the immutable tasks, each
// crew's next start state, and the tasks handed back to the free pool.
struct FrozenPartition {
  std::vector<int> frozen;
  std::vector<CrewState> crew_states;
  std::vector<int> carried_over;
};

namespace detail {

// Shared classification core. `timelines` hold each crew's committed visits
// in start order (executed and planned); `prev_states` are the crews' states
// entering the previous epoch.
inline FrozenPartition partition_frozen_core(
    const std::map<int, std::vector<PlannedVisit>>& timelines,
    const std::map<int, CrewState>& prev_states,
    const std::function<Point(int)>& task_location, double tau, double f) {
  FrozenPartition part;
  std::set<int> frozen_set, carried_set;
  for (const auto& [crew_id, visits] : timelines) {
    const PlannedVisit* anchor = nullptr;
    for (const auto& v : visits) {
      if (v.start <= tau + f + kTimeTol) {
        anchor = &v;
        if (v.start >= tau - kTimeTol) frozen_set.insert(v.task_id);
        // starts before tau were executed under earlier plans
      } else {
        carried_set.insert(v.task_id);
      }
    }
    CrewState state;
    state.crew_id = crew_id;
    if (anchor) {
      state.start_location = task_location(anchor->task_id);
      state.ready_time = std::max(anchor->completion, tau);
    } else {
      const CrewState& prev = prev_states.at(crew_id);
      state.start_location = prev.start_location;
      state.ready_time = std::max(prev.ready_time, tau);
    }
    part.crew_states.push_back(state);
  }
  carried_set = [&] {  // a sync task is frozen for all crews once frozen for one
    std::set<int> res;
    for (int tid : carried_set)
      if (!frozen_set.count(tid)) res.insert(tid);
    return res;
  }();
  part.frozen.assign(frozen_set.begin(), frozen_set.end());
  part.carried_over.assign(carried_set.begin(), carried_set.end());
  return part;
}

}  // namespace detail

// Splits an evaluated plan at reoptimization time `tau` with frozen period
// length `f`: tasks starting in [tau, tau+f] are frozen, tasks starting later
// return to the free pool, and each crew resumes from its last task starting
// by tau+f (at that task's completion, no earlier than tau).
inline FrozenPartition partition_frozen(const ReoptProblem& problem, const Solution& plan,
                                        double tau, double f) {
  if (!plan.schedule.has_value())
    throw std::invalid_argument("partition_frozen: plan has no schedule");
  std::map<int, std::vector<PlannedVisit>> timelines;
  std::map<int, CrewState> prev_states;
  for (const auto& r : plan.routes) {
    auto& tl = timelines[r.crew_id];
    for (int tid : r.task_ids)
      tl.push_back({tid, plan.schedule->start.at(tid), plan.schedule->completion.at(tid)});
    prev_states[r.crew_id] = problem.state(r.crew_id);
  }
  return detail::partition_frozen_core(
      timelines, prev_states, [&](int tid) { return problem.task(tid).location; }, tau, f);
}

struct EpochRecord {
  int index{};
  double tau{};
  std::vector<int> frozen;
  std::vector<int> free_ids;  // N(t)
  std::vector<int> new_ids;   // N_new
  std::vector<CrewState> crew_states;
  Solution solution;
  double runtime_s{};
};

struct TaskOutcome {
  double completion{};
  bool outsourced{};
  int epoch{};  // epoch whose plan fixed this outcome
};

struct DayReport {
  double total_twtt{};
  int reopt_count{};  // epochs fired after the initial static solve
  int outsourced_count{};
  double solver_cpu_s{};
  std::vector<EpochRecord> epochs;
  std::map<int, TaskOutcome> outcomes;
};

namespace detail {

struct DaySimulator {
  const SuperInstance& super;
  const Strategy& strategy;
  const AlnsParams& alns_params;
  DayReport report;

  std::map<int, std::vector<PlannedVisit>> timelines;  // committed plan, per crew
  std::map<int, CrewState> entry_states;               // crew states entering the last epoch
  std::set<int> provisional_outsourced;
  std::map<int, Task> catalog;
  double last_epoch_tau = 0.0;
  int epoch_index = 0;

  explicit DaySimulator(const SuperInstance& s, const Strategy& st, const AlnsParams& ap)
      : super(s), strategy(st), alns_params(ap) {
    strategy.validate();
    for (const auto& t : super.tasks) {
      if (t.arrival > super.tau_max + kTimeTol)
        throw std::invalid_argument("task " + std::to_string(t.id) + " arrives after tau_max");
      catalog[t.id] = t;
    }
    for (const auto& c : super.crews) {
      entry_states[c.id] = CrewState{c.id, super.depot, 0.0};
      timelines[c.id];
    }
  }

  void finalize(int tid, double completion, bool outsourced, int epoch) {
    if (report.outcomes.count(tid)) return;  // executed/frozen outcomes are immutable
    report.outcomes[tid] = {completion, outsourced, epoch};
  }

  ReoptProblem make_problem(double tau, const std::vector<int>& free_ids,
                            const std::vector<CrewState>& states) const {
    ReoptProblem problem;
    problem.epoch_start = tau;
    problem.horizon_end = super.tau_max;
    problem.depot = super.depot;
    problem.travel.speed_kmh = super.speed_kmh;
    problem.crews = super.crews;
    problem.crew_states = states;
    for (int tid : free_ids) problem.tasks.push_back(catalog.at(tid));
    problem.validate(true);
    return problem;
  }

  Solution solve(const ReoptProblem& problem, int epoch) {
    Solution sol = construct_initial(problem);
    if (strategy.solver == SolverKind::ALNS && !problem.tasks.empty()) {
      AlnsParams params = alns_params;
      params.seed = splitmix64(alns_params.seed + static_cast<std::uint64_t>(epoch));
      sol = run_alns(problem, sol, params);
    }
    return sol;
  }

  // Fires one reoptimization at `tau` over the newly arrived `new_ids`.
  void fire_epoch(double tau, std::vector<int> new_ids) {
    const double f = strategy.frozen_len;

    FrozenPartition part = partition_frozen_core(
        timelines, entry_states, [&](int tid) { return catalog.at(tid).location; }, tau, f);

    // visits starting before tau happened; frozen ones will happen as planned
    std::map<int, std::vector<PlannedVisit>> kept;
    for (auto& [crew_id, visits] : timelines) {
      auto& k = kept[crew_id];
      for (const auto& v : visits) {
        if (v.start <= tau + f + kTimeTol) {
          finalize(v.task_id, v.completion, false, epoch_index);
          k.push_back(v);
        }
      }
    }

    // outsourced tasks whose window still admits service are re-offered
    std::vector<int> free_ids = part.carried_over;
    for (int tid : provisional_outsourced) {
      if (catalog.at(tid).latest >= tau - kTimeTol)
        free_ids.push_back(tid);
      else
        finalize(tid, super.tau_max, true, epoch_index);
    }
    free_ids.insert(free_ids.end(), new_ids.begin(), new_ids.end());
    std::sort(free_ids.begin(), free_ids.end());

    ++epoch_index;
    ReoptProblem problem = make_problem(tau, free_ids, part.crew_states);
    auto t0 = std::chrono::steady_clock::now();
    Solution sol = solve(problem, epoch_index);
    double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.solver_cpu_s += runtime;

    // commit: frozen prefix plus the fresh plan
    timelines = std::move(kept);
    if (sol.schedule.has_value()) {
      for (const auto& r : sol.routes)
        for (int tid : r.task_ids)
          timelines[r.crew_id].push_back(
              {tid, sol.schedule->start.at(tid), sol.schedule->completion.at(tid)});
    }
    provisional_outsourced = sol.outsourced;
    std::map<int, CrewState> next_entry;
    for (const auto& st : part.crew_states) next_entry[st.crew_id] = st;
    entry_states = std::move(next_entry);
    last_epoch_tau = tau;

    EpochRecord rec;
    rec.index = epoch_index;
    rec.tau = tau;
    rec.frozen = part.frozen;
    rec.free_ids = free_ids;
    rec.new_ids = std::move(new_ids);
    rec.crew_states = part.crew_states;
    rec.solution = std::move(sol);
    rec.runtime_s = runtime;
    report.epochs.push_back(std::move(rec));
  }

  DayReport run() {
    // epoch 0: the static problem over the initially known tasks
    std::vector<int> static_ids, dynamic_ids;
    for (const auto& t : super.tasks)
      (t.arrival <= kTimeTol ? static_ids : dynamic_ids).push_back(t.id);
    std::sort(dynamic_ids.begin(), dynamic_ids.end(), [&](int a, int b) {
      double aa = catalog.at(a).arrival, ab = catalog.at(b).arrival;
      if (aa != ab) return aa < ab;
      return a < b;
    });

    {
      ReoptProblem problem = make_problem(0.0, static_ids, [&] {
        std::vector<CrewState> states;
        for (const auto& c : super.crews) states.push_back({c.id, super.depot, 0.0});
        return states;
      }());
      auto t0 = std::chrono::steady_clock::now();
      Solution sol = solve(problem, 0);
      double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.solver_cpu_s += runtime;
      if (sol.schedule.has_value()) {
        for (const auto& r : sol.routes)
          for (int tid : r.task_ids)
            timelines[r.crew_id].push_back(
                {tid, sol.schedule->start.at(tid), sol.schedule->completion.at(tid)});
      }
      provisional_outsourced = sol.outsourced;
      EpochRecord rec;
      rec.index = 0;
      rec.tau = 0.0;
      rec.free_ids = static_ids;
      for (const auto& c : super.crews) rec.crew_states.push_back({c.id, super.depot, 0.0});
      rec.solution = std::move(sol);
      rec.runtime_s = runtime;
      report.epochs.push_back(std::move(rec));
    }

    // event loop over arrivals, grouped by identical arrival time
    std::vector<int> pending;
    std::size_t i = 0;
    while (i < dynamic_ids.size()) {
      double s = catalog.at(dynamic_ids[i]).arrival;

      // timers that expired strictly before this arrival
      while (!pending.empty() && last_epoch_tau + strategy.beta_time <= s &&
             last_epoch_tau + strategy.beta_time < super.tau_max - kTimeTol) {
        double tau = last_epoch_tau + strategy.beta_time;
        fire_epoch(tau, std::exchange(pending, {}));
      }

      while (i < dynamic_ids.size() && catalog.at(dynamic_ids[i]).arrival == s)
        pending.push_back(dynamic_ids[i++]);

      if (s < super.tau_max - kTimeTol &&
          trigger_fires(static_cast<int>(pending.size()), s - last_epoch_tau, strategy))
        fire_epoch(s, std::exchange(pending, {}));
    }
    // a timer may still be due after the final arrival
    while (!pending.empty() &&
           last_epoch_tau + strategy.beta_time < super.tau_max - kTimeTol) {
      double tau = last_epoch_tau + strategy.beta_time;
      fire_epoch(tau, std::exchange(pending, {}));
    }

    // day end: the committed plan executes, the rest is outsourced
    for (const auto& [crew_id, visits] : timelines) {
      (void)crew_id;
      for (const auto& v : visits) finalize(v.task_id, v.completion, false, epoch_index);
    }
    for (int tid : provisional_outsourced) finalize(tid, super.tau_max, true, epoch_index);
    for (int tid : pending) finalize(tid, super.tau_max, true, epoch_index);
    for (const auto& t : super.tasks)
      if (!report.outcomes.count(t.id)) finalize(t.id, super.tau_max, true, epoch_index);

    report.reopt_count = epoch_index;
    report.total_twtt = 0.0;
    report.outsourced_count = 0;
    for (const auto& [tid, outcome] : report.outcomes) {
      report.total_twtt += catalog.at(tid).priority * (outcome.completion - catalog.at(tid).arrival);
      if (outcome.outsourced) ++report.outsourced_count;
    }
    return report;
  }
};

}  // namespace detail

// Simulates one working day: solves the static problem at time zero, then
// fires reoptimizations per the strategy's triggers, carrying frozen tasks
// and crew states across epochs. Deterministic for fixed inputs and seed.
inline DayReport simulate_day(const SuperInstance& super, const Strategy& strategy,
                              const AlnsParams& alns_params) {
  detail::DaySimulator sim(super, strategy, alns_params);
  return sim.run();
}

}  // namespace dwsrp
