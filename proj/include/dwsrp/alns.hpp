#pragma once

#include <cmath>

#include "dwsrp/construct.hpp"
#include "dwsrp/core.hpp"
#include "dwsrp/rng.hpp"

namespace dwsrp {

struct AlnsParams {
  double initial_temperature = 1000.0;  // T0
  double cooling = 0.95;                // alpha
  int max_iterations = 250;             // nu1
  int max_non_improving = 50;           // nu2, counted against the best solution
  double gamma_min = 0.50;
  double gamma_max = 1.00;
  double sigma_new_best = 0.08;   // sigma1
  double sigma_improved = 0.05;   // sigma2
  double sigma_accepted = 0.01;   // sigma3
  double sigma_rejected = -0.03;  // sigma4
  int regret_depth = 2;           // n of ReI-n
  std::uint64_t seed = 1;
  bool cool_every_iteration = false;  // off: cool only after accepting a non-improving move

  void validate() const {
    if (!(sigma_new_best > sigma_improved && sigma_improved > sigma_accepted &&
          sigma_accepted > 0 && 0 > sigma_rejected))
      throw std::invalid_argument("need sigma1 > sigma2 > sigma3 > 0 > sigma4");
    if (!(gamma_min <= gamma_max && gamma_min >= 0 && gamma_max <= 1))
      throw std::invalid_argument("need 0 <= gamma_min <= gamma_max <= 1");
    if (cooling <= 0 || cooling >= 1) throw std::invalid_argument("need alpha in (0,1)");
    if (initial_temperature <= 0) throw std::invalid_argument("need T0 > 0");
    if (regret_depth < 2) throw std::invalid_argument("need regret depth n >= 2");
    if (max_iterations < 0 || max_non_improving < 0)
      throw std::invalid_argument("iteration limits must be non-negative");
  }
};

enum class DestroyOp { RandomTask = 0, WorstTask, RandomTeam, WorstTeam, Shaw };
enum class RepairOp { Random = 0, Greedy, Regret };

inline constexpr std::size_t kDestroyCount = 5;
inline constexpr std::size_t kRepairCount = 3;
inline constexpr double kWeightFloor = 0.01;

inline const char* name_of(DestroyOp op) {
  switch (op) {
    case DestroyOp::RandomTask: return "RTaR";
    case DestroyOp::WorstTask: return "WTaR";
    case DestroyOp::RandomTeam: return "RTeR";
    case DestroyOp::WorstTeam: return "WTeR";
    case DestroyOp::Shaw: return "SR";
  }
  return "?";
}
inline const char* name_of(RepairOp op) {
  switch (op) {
    case RepairOp::Random: return "RaI";
    case RepairOp::Greedy: return "GI";
    case RepairOp::Regret: return "ReI";
  }
  return "?";
}

// Adaptive operator weights; always positive, each vector sums to 1.
struct OperatorBank {
  std::vector<double> destroy_weights = std::vector<double>(kDestroyCount, 1.0 / kDestroyCount);
  std::vector<double> repair_weights = std::vector<double>(kRepairCount, 1.0 / kRepairCount);
};

enum class IterationOutcome { NewBest, ImprovedCurrent, Accepted, Rejected };

// Roulette wheel: index i with probability weights[i] (weights normalized).
inline std::size_t roulette_select(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform_unit(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

inline void normalize_clamped(std::vector<double>& weights) {
  double total = 0.0;
  for (double& w : weights) {
    w = std::max(w, kWeightFloor);
    total += w;
  }
  for (double& w : weights) w /= total;
}

// Adds the outcome's sigma to both chosen operators, clamps to the floor and
// renormalizes each vector.
inline void update_weights(OperatorBank& bank, DestroyOp d, RepairOp r, IterationOutcome outcome,
                           const AlnsParams& params) {
  double sigma = 0.0;
  switch (outcome) {
    case IterationOutcome::NewBest: sigma = params.sigma_new_best; break;
    case IterationOutcome::ImprovedCurrent: sigma = params.sigma_improved; break;
    case IterationOutcome::Accepted: sigma = params.sigma_accepted; break;
    case IterationOutcome::Rejected: sigma = params.sigma_rejected; break;
  }
  bank.destroy_weights[static_cast<std::size_t>(d)] += sigma;
  bank.repair_weights[static_cast<std::size_t>(r)] += sigma;
  normalize_clamped(bank.destroy_weights);
  normalize_clamped(bank.repair_weights);
}

// Degree of destruction, uniform in [gamma_min, gamma_max].
inline double draw_gamma(const AlnsParams& params, Rng& rng) {
  return uniform_real(rng, params.gamma_min, params.gamma_max);
}

// round(gamma * in-house), at least 1 while anything is in-house.
inline std::size_t removal_count(double gamma, std::size_t in_house) {
  if (in_house == 0) return 0;
  auto n = static_cast<std::size_t>(std::llround(gamma * static_cast<double>(in_house)));
  return std::min(in_house, std::max<std::size_t>(1, n));
}

// SA criterion: improving moves always pass, otherwise exp(-delta/T).
inline bool accept(double delta, double temperature, Rng& rng) {
  if (delta < 0) return true;
  return uniform_unit(rng) < std::exp(-delta / temperature);
}

namespace detail {

inline std::vector<int> sorted_in_house(const Solution& sol) {
  auto set = sol.in_house_ids();
  return {set.begin(), set.end()};
}

inline void strip_task(std::vector<Route>& routes, int task_id) {
  for (auto& r : routes)
    std::erase(r.task_ids, task_id);
}

// twtt of the current routes with `task_id` removed from every route and not
// counted in the objective (leave-one-out score support).
inline double twtt_without_task(const ReoptProblem& problem, const Solution& current, int task_id) {
  std::vector<Route> routes = current.routes;
  strip_task(routes, task_id);
  EvalResult eval = evaluate_schedule(problem, routes, current.outsourced);
  return twtt(problem, eval.schedule, current.outsourced);
}

// twtt with one crew's route emptied; that crew's exclusive tasks disappear
// from the objective, shared tasks stay in the partners' routes.
inline double twtt_without_team(const ReoptProblem& problem, const Solution& current, int crew_id) {
  std::vector<Route> routes = current.routes;
  for (auto& r : routes)
    if (r.crew_id == crew_id) r.task_ids.clear();
  EvalResult eval = evaluate_schedule(problem, routes, current.outsourced);
  return twtt(problem, eval.schedule, current.outsourced);
}

}  // namespace detail

// RTaR: uniformly chosen in-house tasks; a task held by several crews is
// removed from every route containing it.
inline std::pair<Solution, std::vector<int>> destroy_random_task(const ReoptProblem& problem,
                                                                 const Solution& current,
                                                                 std::size_t count, Rng& rng) {
  std::vector<Route> routes = current.routes;
  std::vector<int> pool = detail::sorted_in_house(current);
  std::vector<int> removed;
  while (removed.size() < count && !pool.empty()) {
    std::size_t idx = uniform_index(rng, pool.size());
    int tid = pool[idx];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    detail::strip_task(routes, tid);
    removed.push_back(tid);
  }
  return {make_solution(problem, std::move(routes), current.outsourced), removed};
}

// WTaR: repeatedly removes the task whose leave-one-out removal lowers the
// objective the most; re-scores after each removal.
inline std::pair<Solution, std::vector<int>> destroy_worst_task(const ReoptProblem& problem,
                                                                const Solution& current,
                                                                std::size_t count) {
  Solution work = current;
  std::vector<int> removed;
  while (removed.size() < count) {
    std::vector<int> pool = detail::sorted_in_house(work);
    if (pool.empty()) break;
    int worst = -1;
    double worst_score = -kInfinity;
    for (int tid : pool) {
      double score = work.twtt - detail::twtt_without_task(problem, work, tid);
      if (score > worst_score + 1e-12) {
        worst_score = score;
        worst = tid;  // ties keep the lowest id (pool is ascending)
      }
    }
    std::vector<Route> routes = work.routes;
    detail::strip_task(routes, worst);
    work = make_solution(problem, std::move(routes), work.outsourced);
    removed.push_back(worst);
  }
  return {work, removed};
}

// RTeR: strips whole routes, team by team, teams drawn uniformly without
// replacement among those still holding tasks.
inline std::pair<Solution, std::vector<int>> destroy_random_team(const ReoptProblem& problem,
                                                                 const Solution& current,
                                                                 std::size_t count, Rng& rng) {
  std::vector<Route> routes = current.routes;
  std::vector<int> removed;
  std::vector<std::size_t> candidates;  // indexes into routes
  for (std::size_t i = 0; i < routes.size(); ++i)
    if (!routes[i].task_ids.empty()) candidates.push_back(i);

  while (removed.size() < count && !candidates.empty()) {
    std::size_t pick = uniform_index(rng, candidates.size());
    std::size_t route_idx = candidates[pick];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<int> order = routes[route_idx].task_ids;  // snapshot, route order
    for (int tid : order) {
      if (removed.size() >= count) break;
      detail::strip_task(routes, tid);
      removed.push_back(tid);
    }
    // sync removals may have emptied other candidates
    std::erase_if(candidates, [&](std::size_t i) { return routes[i].task_ids.empty(); });
  }
  return {make_solution(problem, std::move(routes), current.outsourced), removed};
}

// WTeR: scores each team by emptying its route (exclusive tasks uncounted),
// strips the worst team's route in order, re-scoring whenever a route empties.
inline std::pair<Solution, std::vector<int>> destroy_worst_team(const ReoptProblem& problem,
                                                                const Solution& current,
                                                                std::size_t count) {
  Solution work = current;
  std::vector<int> removed;
  while (removed.size() < count) {
    int worst_crew = -1;
    double worst_score = -kInfinity;
    for (const auto& r : work.routes) {
      if (r.task_ids.empty()) continue;
      double score = work.twtt - detail::twtt_without_team(problem, work, r.crew_id);
      if (worst_crew == -1 || score > worst_score + 1e-12) {  // ties keep the first crew
        worst_score = score;
        worst_crew = r.crew_id;
      }
    }
    if (worst_crew == -1) break;

    std::vector<Route> routes = work.routes;
    std::vector<int> order;
    for (const auto& r : routes)
      if (r.crew_id == worst_crew) order = r.task_ids;
    for (int tid : order) {
      if (removed.size() >= count) break;
      detail::strip_task(routes, tid);
      removed.push_back(tid);
    }
    work = make_solution(problem, std::move(routes), work.outsourced);
  }
  return {work, removed};
}

// Relatedness of two tasks: L2 distance between their skill vectors
// (the square root of the Hamming distance, for binary vectors).
inline double shaw_relatedness(const Task& a, const Task& b) {
  if (a.skills.size() != b.skills.size())
    throw std::invalid_argument("shaw_relatedness: skill vector length mismatch");
  double sum = 0.0;
  for (std::size_t q = 0; q < a.skills.size(); ++q) {
    double d = (a.skills.has(q) ? 1.0 : 0.0) - (b.skills.has(q) ? 1.0 : 0.0);
    sum += d * d;
  }
  return std::sqrt(sum);
}

// SR: random seed task, then repeatedly the task most related to the most
// recently removed one; ties by ascending id.
inline std::pair<Solution, std::vector<int>> destroy_shaw(const ReoptProblem& problem,
                                                          const Solution& current,
                                                          std::size_t count, Rng& rng) {
  std::vector<Route> routes = current.routes;
  std::vector<int> pool = detail::sorted_in_house(current);
  std::vector<int> removed;
  if (pool.empty() || count == 0)
    return {make_solution(problem, std::move(routes), current.outsourced), removed};

  std::size_t seed_idx = uniform_index(rng, pool.size());
  int last = pool[seed_idx];
  pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(seed_idx));
  detail::strip_task(routes, last);
  removed.push_back(last);

  while (removed.size() < count && !pool.empty()) {
    int next = pool.front();
    double best = kInfinity;
    for (int tid : pool) {
      double rel = shaw_relatedness(problem.task(last), problem.task(tid));
      if (rel < best - 1e-12) {
        best = rel;
        next = tid;
      }
    }
    std::erase(pool, next);
    detail::strip_task(routes, next);
    removed.push_back(next);
    last = next;
  }
  return {make_solution(problem, std::move(routes), current.outsourced), removed};
}

// RaI: pending tasks in priority order, each inserted at the best joint
// positions of one uniformly drawn combination; outsourced if uncoverable or
// the drawn combination admits no feasible placement.
inline Solution repair_random(const ReoptProblem& problem, const Solution& partial,
                              const std::vector<int>& pending, Rng& rng) {
  Solution sol = partial;
  for (int tid : priority_order(problem, pending)) {
    const Task& task = problem.task(tid);
    auto combos = irreducible_combinations(task, problem.crews);
    std::optional<InsertionCandidate> cand;
    if (!combos.empty())
      cand = best_insertion(problem, sol, task, combos[uniform_index(rng, combos.size())]);
    if (cand) {
      sol = apply_insertion(problem, sol, *cand);
    } else {
      sol.outsourced.insert(tid);
      sol = make_solution(problem, sol.routes, sol.outsourced);
    }
  }
  return sol;
}

// GI: like RaI but takes the combination with the most favorable insertion
// cost.
inline Solution repair_greedy(const ReoptProblem& problem, const Solution& partial,
                              const std::vector<int>& pending) {
  Solution sol = partial;
  for (int tid : priority_order(problem, pending)) {
    const Task& task = problem.task(tid);
    auto combos = irreducible_combinations(task, problem.crews);
    std::optional<InsertionCandidate> cand;
    if (!combos.empty()) cand = best_insertion_any(problem, sol, task, combos);
    if (cand) {
      sol = apply_insertion(problem, sol, *cand);
    } else {
      sol.outsourced.insert(tid);
      sol = make_solution(problem, sol.routes, sol.outsourced);
    }
  }
  return sol;
}

// sum_{k=2..min(n,m)} (delta_k - delta_1) over ascending combination deltas.
inline double regret_value(std::vector<double> deltas, int n) {
  if (deltas.empty()) return -kInfinity;
  std::sort(deltas.begin(), deltas.end());
  double regret = 0.0;
  std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(n), deltas.size());
  for (std::size_t k = 1; k < depth; ++k) regret += deltas[k] - deltas[0];
  return regret;
}

// ReI-n: inserts the task with the largest summed gap between its best and
// its k-th best combination deltas, k = 2..min(n, |A_i|). Tasks with no
// feasible combination carry regret -inf and are outsourced once selected,
// i.e. only after every placeable task has been placed.
inline Solution repair_regret(const ReoptProblem& problem, const Solution& partial,
                              const std::vector<int>& pending, int n) {
  if (n < 2) throw std::invalid_argument("repair_regret: need n >= 2");
  Solution sol = partial;
  std::vector<int> open = pending;
  std::sort(open.begin(), open.end());

  while (!open.empty()) {
    int chosen = -1;
    double chosen_regret = -kInfinity;
    bool chosen_placeable = false;
    std::optional<InsertionCandidate> chosen_cand;

    for (int tid : open) {
      const Task& task = problem.task(tid);
      auto combos = irreducible_combinations(task, problem.crews);
      std::vector<double> deltas;
      std::optional<InsertionCandidate> best;
      for (const auto& combo : combos) {
        auto cand = best_insertion(problem, sol, task, combo);
        if (!cand) continue;
        deltas.push_back(cand->delta_cost);
        if (!best || cand->delta_cost < best->delta_cost - 1e-9) best = cand;
      }
      double regret = regret_value(std::move(deltas), n);
      bool better;
      if (chosen == -1) {
        better = true;
      } else if (regret != chosen_regret) {
        better = regret > chosen_regret;
      } else {  // ties: higher priority, then lower id (open is ascending)
        better = problem.task(tid).priority > problem.task(chosen).priority;
      }
      if (better) {
        chosen = tid;
        chosen_regret = regret;
        chosen_placeable = best.has_value();
        chosen_cand = best;
      }
    }

    std::erase(open, chosen);
    if (chosen_placeable) {
      sol = apply_insertion(problem, sol, *chosen_cand);
    } else {
      sol.outsourced.insert(chosen);
      sol = make_solution(problem, sol.routes, sol.outsourced);
    }
  }
  return sol;
}

struct AlnsIterationRecord {
  int iteration{};
  DestroyOp destroy{};
  RepairOp repair{};
  double gamma{};
  std::size_t removed{};
  double candidate_twtt{};
  double current_twtt{};  // after the acceptance decision
  double best_twtt{};
  double temperature{};  // after any cooling this iteration
  IterationOutcome outcome{};
};
using AlnsTrace = std::vector<AlnsIterationRecord>;

// Algorithm 2. Deterministic given (problem, initial, params); stops after
// nu1 iterations or nu2 consecutive iterations without a new best solution.
inline Solution run_alns(const ReoptProblem& problem, const Solution& initial,
                         const AlnsParams& params, AlnsTrace* trace = nullptr,
                         OperatorBank* bank_out = nullptr) {
  params.validate();
  if (!initial.feasible()) throw std::invalid_argument("run_alns: initial solution infeasible");

  Solution best = initial;
  Solution current = initial;
  OperatorBank bank;
  Rng rng(splitmix64(params.seed));
  double temperature = params.initial_temperature;
  int non_improving = 0;

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    if (non_improving >= params.max_non_improving) break;

    auto destroy_op = static_cast<DestroyOp>(roulette_select(bank.destroy_weights, rng));
    auto repair_op = static_cast<RepairOp>(roulette_select(bank.repair_weights, rng));
    double gamma = draw_gamma(params, rng);
    std::size_t count = removal_count(gamma, current.in_house_ids().size());

    std::pair<Solution, std::vector<int>> destroyed;
    switch (destroy_op) {
      case DestroyOp::RandomTask: destroyed = destroy_random_task(problem, current, count, rng); break;
      case DestroyOp::WorstTask: destroyed = destroy_worst_task(problem, current, count); break;
      case DestroyOp::RandomTeam: destroyed = destroy_random_team(problem, current, count, rng); break;
      case DestroyOp::WorstTeam: destroyed = destroy_worst_team(problem, current, count); break;
      case DestroyOp::Shaw: destroyed = destroy_shaw(problem, current, count, rng); break;
    }

    // the repair pool: removed tasks plus everything currently outsourced
    Solution partial = destroyed.first;
    std::vector<int> pending = destroyed.second;
    pending.insert(pending.end(), partial.outsourced.begin(), partial.outsourced.end());
    if (!partial.outsourced.empty()) {
      partial.outsourced.clear();
      partial = make_solution(problem, partial.routes, partial.outsourced);
    }

    Solution candidate;
    switch (repair_op) {
      case RepairOp::Random: candidate = repair_random(problem, partial, pending, rng); break;
      case RepairOp::Greedy: candidate = repair_greedy(problem, partial, pending); break;
      case RepairOp::Regret: candidate = repair_regret(problem, partial, pending, params.regret_depth); break;
    }

    double delta = candidate.twtt - current.twtt;
    IterationOutcome outcome;
    if (accept(delta, temperature, rng)) {
      if (candidate.twtt < best.twtt) {
        best = candidate;
        outcome = IterationOutcome::NewBest;
      } else {
        outcome = delta < 0 ? IterationOutcome::ImprovedCurrent : IterationOutcome::Accepted;
      }
      if (delta >= 0) temperature *= params.cooling;  // cool after accepting a non-improving move
      current = candidate;
    } else {
      outcome = IterationOutcome::Rejected;
    }
    if (params.cool_every_iteration && outcome != IterationOutcome::Accepted)
      temperature *= params.cooling;  // the Accepted branch cooled already

    non_improving = outcome == IterationOutcome::NewBest ? 0 : non_improving + 1;
    update_weights(bank, destroy_op, repair_op, outcome, params);

    if (trace)
      trace->push_back({iter, destroy_op, repair_op, gamma, destroyed.second.size(),
                        candidate.twtt, current.twtt, best.twtt, temperature, outcome});
  }
  if (bank_out) *bank_out = bank;
  return best;
}

}  // namespace dwsrp
