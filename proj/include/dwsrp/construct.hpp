#pragma once

#include <map>
#include <optional>

#include "dwsrp/core.hpp"

namespace dwsrp {

// A fully evaluated joint placement of one task across a crew combination.
struct InsertionCandidate {
  int task_id{};
  std::vector<int> combination;        // crew ids, sorted ascending
  std::map<int, std::size_t> positions;  // crew id -> insertion index
  double delta_cost = kInfinity;       // twtt(with task) - twtt(without)
};

namespace detail {

inline std::vector<Route> with_insertion(const std::vector<Route>& routes, int task_id,
                                         const std::map<int, std::size_t>& positions) {
  std::vector<Route> out = routes;
  for (auto& r : out) {
    auto it = positions.find(r.crew_id);
    if (it == positions.end()) continue;
    r.task_ids.insert(r.task_ids.begin() + static_cast<std::ptrdiff_t>(it->second), task_id);
  }
  return out;
}

}  // namespace detail

// Best joint placement of `task` over one crew combination: exhaustive over
// the Cartesian product of per-crew insertion indices, each candidate fully
// re-evaluated (synchronization can shift already-routed tasks, so
// incremental deltas are unsafe). Returns nullopt when no placement is
// feasible. Ties keep the lexicographically first position tuple.
inline std::optional<InsertionCandidate> best_insertion(const ReoptProblem& problem,
                                                        const Solution& current, const Task& task,
                                                        const std::vector<int>& combination) {
  double base = current.twtt;
  if (!current.feasible())
    throw std::invalid_argument("best_insertion: current solution must be feasible");

  std::vector<const Route*> combo_routes;
  combo_routes.reserve(combination.size());
  for (int cid : combination) {
    const Route* found = nullptr;
    for (const auto& r : current.routes)
      if (r.crew_id == cid) found = &r;
    if (!found) throw std::invalid_argument("best_insertion: no route for crew " + std::to_string(cid));
    combo_routes.push_back(found);
  }

  std::optional<InsertionCandidate> best;
  std::vector<std::size_t> pos(combination.size(), 0);
  while (true) {
    std::map<int, std::size_t> positions;
    for (std::size_t i = 0; i < combination.size(); ++i) positions[combination[i]] = pos[i];

    std::vector<Route> candidate_routes = detail::with_insertion(current.routes, task.id, positions);
    EvalResult eval = evaluate_schedule(problem, candidate_routes, current.outsourced);
    if (eval.feasible()) {
      double delta = twtt(problem, eval.schedule, current.outsourced) - base;
      if (!best || delta < best->delta_cost - 1e-12)
        best = InsertionCandidate{task.id, combination, positions, delta};
    }

    // odometer over per-crew positions
    std::size_t i = 0;
    for (; i < pos.size(); ++i) {
      if (pos[i] < combo_routes[i]->task_ids.size()) {
        ++pos[i];
        break;
      }
      pos[i] = 0;
    }
    if (i == pos.size()) break;
  }
  return best;
}

// Lowest-delta insertion across all of the task's irreducible combinations.
// Ties prefer the smaller combination, then the lexicographically smallest
// crew-id set (combinations are already enumerated in that order).
inline std::optional<InsertionCandidate> best_insertion_any(
    const ReoptProblem& problem, const Solution& current, const Task& task,
    const std::vector<std::vector<int>>& combinations) {
  std::optional<InsertionCandidate> best;
  for (const auto& combo : combinations) {
    auto cand = best_insertion(problem, current, task, combo);
    if (cand && (!best || cand->delta_cost < best->delta_cost - 1e-9)) best = cand;
  }
  return best;
}

inline Solution apply_insertion(const ReoptProblem& problem, const Solution& current,
                                const InsertionCandidate& cand) {
  return make_solution(problem, detail::with_insertion(current.routes, cand.task_id, cand.positions),
                       current.outsourced);
}

// Priority order used by the constructive heuristic and the repair
// heuristics: non-increasing priority, ties by ascending task id.
inline std::vector<int> priority_order(const ReoptProblem& problem, std::vector<int> task_ids) {
  std::sort(task_ids.begin(), task_ids.end(), [&](int a, int b) {
    double wa = problem.task(a).priority, wb = problem.task(b).priority;
    if (wa != wb) return wa > wb;
    return a < b;
  });
  return task_ids;
}

// Constructive heuristic: walk tasks in non-increasing priority; insert each
// at the cheapest feasible (combination, positions) pair; outsource tasks
// with no covering combination or no feasible placement.
inline Solution construct_initial(const ReoptProblem& problem) {
  Solution sol = empty_solution(problem);

  std::vector<int> ids;
  ids.reserve(problem.tasks.size());
  for (const auto& t : problem.tasks) ids.push_back(t.id);

  for (int tid : priority_order(problem, std::move(ids))) {
    const Task& task = problem.task(tid);
    auto combos = irreducible_combinations(task, problem.crews);
    std::optional<InsertionCandidate> best;
    if (!combos.empty()) best = best_insertion_any(problem, sol, task, combos);
    if (best) {
      sol = apply_insertion(problem, sol, *best);
    } else {
      sol.outsourced.insert(tid);
      sol = make_solution(problem, sol.routes, sol.outsourced);
    }
  }
  return sol;
}

}  // namespace dwsrp
