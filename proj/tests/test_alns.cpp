#include <catch2/catch_amalgamated.hpp>

#include "dwsrp/alns.hpp"
#include "dwsrp/instgen.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace dwsrp;
using fixtures::at_minutes;
using fixtures::crew;
using fixtures::task;

namespace {

// two crews, four single-crew tasks and one synchronized task
ReoptProblem small_mixed_problem() {
  std::vector<Task> tasks{
      task(1, at_minutes(10), SkillVector{1, 0}, 10, 2),
      task(2, at_minutes(25), SkillVector{1, 0}, 8, 1),
      task(3, at_minutes(8), SkillVector{0, 1}, 12, 3),
      task(4, at_minutes(30), SkillVector{0, 1}, 6, 1.5),
      task(5, at_minutes(18), SkillVector{1, 1}, 10, 4),
  };
  return fixtures::problem(tasks, {crew(1, SkillVector{1, 0}), crew(2, SkillVector{0, 1})});
}

Solution initial_for(const ReoptProblem& problem) { return construct_initial(problem); }

}  // namespace

TEST_CASE("gamma draws and removal counts") {
  AlnsParams params;
  Rng rng(1);

  SECTION("degenerate range") {
    params.gamma_min = params.gamma_max = 0.5;
    for (int i = 0; i < 10; ++i) CHECK(draw_gamma(params, rng) == 0.5);
  }
  SECTION("rounding and the at-least-one rule") {
    CHECK(removal_count(0.73, 10) == 7);
    CHECK(removal_count(0.5, 1) == 1);
    CHECK(removal_count(0.01, 8) == 1);
    CHECK(removal_count(0.9, 0) == 0);
    CHECK(removal_count(1.0, 12) == 12);
  }
  SECTION("empirical mean over the default range") {
    params.gamma_min = 0.5;
    params.gamma_max = 1.0;
    double sum = 0;
    for (int i = 0; i < 10000; ++i) sum += draw_gamma(params, rng);
    double mean = sum / 10000;
    CHECK(mean > 0.74);
    CHECK(mean < 0.76);
  }
}

TEST_CASE("random task removal strips everything it picks, sync tasks from all routes") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  REQUIRE(initial.in_house_ids().size() == 5);
  Rng rng(2);

  SECTION("full destruction empties the routes") {
    auto [partial, removed] = destroy_random_task(problem, initial, 5, rng);
    CHECK(removed.size() == 5);
    CHECK(partial.in_house_ids().empty());
    CHECK(partial.feasible());
  }
  SECTION("a removed sync task disappears from every route") {
    for (int trial = 0; trial < 20; ++trial) {
      auto [partial, removed] = destroy_random_task(problem, initial, 2, rng);
      for (const auto& r : partial.routes)
        for (int tid : removed)
          CHECK(std::find(r.task_ids.begin(), r.task_ids.end(), tid) == r.task_ids.end());
    }
  }
  SECTION("selection is uniform") {
    std::map<int, int> hits;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      auto [partial, removed] = destroy_random_task(problem, initial, 1, rng);
      hits[removed[0]]++;
    }
    // chi-square against uniform over 5 tasks, 4 dof; 13.28 ~ p=0.01
    double chi2 = 0, expected = trials / 5.0;
    for (const auto& [tid, count] : hits) chi2 += (count - expected) * (count - expected) / expected;
    CHECK(hits.size() == 5);
    CHECK(chi2 < 13.28);
  }
}

TEST_CASE("worst task removal follows leave-one-out scores") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);

  SECTION("single in-house task is the one removed") {
    ReoptProblem one = fixtures::problem({task(1, at_minutes(10), SkillVector{1}, 5)},
                                         {crew(1, SkillVector{1})});
    Solution sol = construct_initial(one);
    auto [partial, removed] = destroy_worst_task(one, sol, 1);
    CHECK(removed == std::vector<int>{1});
    CHECK(partial.in_house_ids().empty());
  }
  SECTION("removal order matches brute-force leave-one-out scoring") {
    Solution work = initial;
    auto [partial, removed] = destroy_worst_task(problem, initial, 3);
    for (int step = 0; step < 3; ++step) {
      // recompute the scores the operator saw at this step
      int expect = -1;
      double best_score = -kInfinity;
      for (int tid : work.in_house_ids()) {
        std::vector<Route> routes = work.routes;
        for (auto& r : routes) std::erase(r.task_ids, tid);
        auto eval = evaluate_schedule(problem, routes, work.outsourced);
        double score = work.twtt - twtt(problem, eval.schedule, work.outsourced);
        if (score > best_score + 1e-12) {
          best_score = score;
          expect = tid;
        }
      }
      CHECK(removed[step] == expect);
      std::vector<Route> routes = work.routes;
      for (auto& r : routes) std::erase(r.task_ids, removed[step]);
      work = make_solution(problem, routes, work.outsourced);
    }
    CHECK(partial.twtt == Catch::Approx(work.twtt));
  }
  SECTION("a task causing large sync idle for a partner outranks an isolated equal-weight task") {
    // task 1 keeps crew 1 busy, so sync task 2 starts late and crew 2 idles;
    // its leave-one-out score absorbs the released idle, unlike task 3's
    std::vector<Task> tasks{
        task(1, at_minutes(40), SkillVector{1, 0}, 30, 1),
        task(2, at_minutes(40), SkillVector{1, 1}, 5, 1, 0, 540),
        task(3, at_minutes(5), SkillVector{0, 1}, 5, 1),
    };
    auto p = fixtures::problem(tasks, {crew(1, SkillVector{1, 0}), crew(2, SkillVector{0, 1})});
    Solution sol = make_solution(p, {{1, {1, 2}}, {2, {3, 2}}}, {});
    REQUIRE(sol.feasible());
    auto leave_one_out = [&](int tid) {
      std::vector<Route> routes = sol.routes;
      for (auto& r : routes) std::erase(r.task_ids, tid);
      auto eval = evaluate_schedule(p, routes, {});
      return sol.twtt - twtt(p, eval.schedule, {});
    };
    double own_contribution_1 =
        (sol.schedule->completion.at(1) - p.task(1).arrival) * p.task(1).priority;
    CHECK(leave_one_out(1) > own_contribution_1 + 1.0);  // idle release adds to the score
    CHECK(leave_one_out(1) > leave_one_out(3));
    auto [partial, removed] = destroy_worst_task(p, sol, 1);
    CHECK(removed == std::vector<int>{1});
  }
}

TEST_CASE("team removal operators") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  Rng rng(3);

  SECTION("random team removal always removes exactly min(count, in-house)") {
    for (std::size_t count : {1u, 3u, 5u, 9u}) {
      Rng local(count);
      auto [partial, removed] = destroy_random_team(problem, initial, count, local);
      CHECK(removed.size() == std::min<std::size_t>(count, 5));
      CHECK(partial.in_house_ids().size() == 5 - removed.size());
    }
  }
  SECTION("one team holding every task makes team removal a full strip") {
    ReoptProblem p = fixtures::problem({task(1, at_minutes(5), SkillVector{1}, 5),
                                        task(2, at_minutes(10), SkillVector{1}, 5)},
                                       {crew(1, SkillVector{1})});
    Solution sol = construct_initial(p);
    auto [partial, removed] = destroy_random_team(p, sol, 2, rng);
    CHECK(removed.size() == 2);
    CHECK(partial.in_house_ids().empty());
  }
  SECTION("team choice is uniform over teams with tasks") {
    std::map<int, int> first_pick;
    for (int i = 0; i < 4000; ++i) {
      auto [partial, removed] = destroy_random_team(problem, initial, 1, rng);
      // the removed task identifies which route was hit first
      for (const auto& r : initial.routes)
        if (!r.task_ids.empty() && r.task_ids.front() == removed.front()) first_pick[r.crew_id]++;
    }
    CHECK(first_pick.size() == 2);
    for (const auto& [cid, hits] : first_pick) {
      CHECK(hits > 1750);
      CHECK(hits < 2250);
    }
  }
  SECTION("single-team instances pick the only team") {
    ReoptProblem p = fixtures::problem({task(1, at_minutes(5), SkillVector{1}, 5)},
                                       {crew(1, SkillVector{1})});
    Solution sol = construct_initial(p);
    auto [partial, removed] = destroy_worst_team(p, sol, 1);
    CHECK(removed == std::vector<int>{1});
  }
  SECTION("worst team matches the leave-one-team-out oracle") {
    int expect = -1;
    double best_score = -kInfinity;
    for (const auto& r : initial.routes) {
      if (r.task_ids.empty()) continue;
      std::vector<Route> routes = initial.routes;
      for (auto& rr : routes)
        if (rr.crew_id == r.crew_id) rr.task_ids.clear();
      auto eval = evaluate_schedule(problem, routes, initial.outsourced);
      double score = initial.twtt - twtt(problem, eval.schedule, initial.outsourced);
      if (score > best_score + 1e-12) {
        best_score = score;
        expect = r.crew_id;
      }
    }
    auto [partial, removed] = destroy_worst_team(problem, initial, 1);
    int hit_crew = -1;
    for (const auto& r : initial.routes)
      if (!r.task_ids.empty() && r.task_ids.front() == removed.front()) hit_crew = r.crew_id;
    CHECK(hit_crew == expect);
  }
}

TEST_CASE("shaw relatedness is the skill-vector distance") {
  auto a = task(1, {0, 0}, SkillVector{1, 1, 0, 0, 1});
  auto b = task(2, {9, 9}, SkillVector{1, 1, 0, 0, 1});
  CHECK(shaw_relatedness(a, b) == 0.0);

  auto c = task(3, {0, 0}, SkillVector{0, 1, 0, 0, 1});
  CHECK(shaw_relatedness(a, c) == Catch::Approx(1.0));

  auto d = task(4, {0, 0}, SkillVector{1, 0, 1, 0, 1});
  auto e = task(5, {0, 0}, SkillVector{0, 1, 0, 1, 0});
  CHECK(shaw_relatedness(d, e) == Catch::Approx(std::sqrt(5.0)));
}

TEST_CASE("shaw removal chains the most related tasks") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);

  SECTION("count one removes only the random seed") {
    Rng rng(4);
    auto [partial, removed] = destroy_shaw(problem, initial, 1, rng);
    CHECK(removed.size() == 1);
    CHECK(partial.in_house_ids().size() == 4);
  }
  SECTION("the chain matches argmin recomputation and is deterministic") {
    Rng rng(7);
    auto [partial, removed] = destroy_shaw(problem, initial, 4, rng);
    REQUIRE(removed.size() == 4);
    std::set<int> pool = initial.in_house_ids();
    pool.erase(removed[0]);
    int last = removed[0];
    for (std::size_t step = 1; step < removed.size(); ++step) {
      int expect = -1;
      double best = kInfinity;
      for (int tid : pool) {  // ascending ids: ties resolve to the lowest id
        double rel = shaw_relatedness(problem.task(last), problem.task(tid));
        if (rel < best - 1e-12) {
          best = rel;
          expect = tid;
        }
      }
      CHECK(removed[step] == expect);
      pool.erase(removed[step]);
      last = removed[step];
    }
    Rng rng2(7);
    auto [partial2, removed2] = destroy_shaw(problem, initial, 4, rng2);
    CHECK(removed2 == removed);
  }
}

TEST_CASE("repair heuristics") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  Rng rng(5);

  SECTION("empty pending is the identity") {
    CHECK(repair_random(problem, initial, {}, rng).twtt == Catch::Approx(initial.twtt));
    CHECK(repair_greedy(problem, initial, {}).twtt == Catch::Approx(initial.twtt));
    CHECK(repair_regret(problem, initial, {}, 2).twtt == Catch::Approx(initial.twtt));
  }
  SECTION("previously outsourced tasks re-enter the pool and repairs stay feasible") {
    auto [partial, removed] = destroy_random_task(problem, initial, 2, rng);
    // pool as the search loop builds it: removed plus everything outsourced
    partial.outsourced.insert(removed[0]);
    std::vector<int> pending{removed.begin(), removed.end()};
    pending.insert(pending.end(), partial.outsourced.begin(), partial.outsourced.end());
    std::sort(pending.begin(), pending.end());
    pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
    partial.outsourced.clear();
    partial = make_solution(problem, partial.routes, partial.outsourced);
    Solution fixed = repair_greedy(problem, partial, pending);
    CHECK(fixed.feasible());
    CHECK(check_feasibility(problem, fixed).empty());
    // conservation: everything is either in-house or outsourced afterwards
    auto in_house = fixed.in_house_ids();
    for (const auto& t : problem.tasks)
      CHECK((in_house.count(t.id) > 0) != (fixed.outsourced.count(t.id) > 0));
  }
  SECTION("greedy takes the cheapest combination for a lone pending task") {
    auto [partial, removed] = destroy_random_task(problem, initial, 1, rng);
    int tid = removed[0];
    Solution fixed = repair_greedy(problem, partial, {tid});
    auto combos = irreducible_combinations(problem.task(tid), problem.crews);
    auto best = best_insertion_any(problem, partial, problem.task(tid), combos);
    REQUIRE(best.has_value());
    CHECK(fixed.twtt == Catch::Approx(partial.twtt + best->delta_cost));
  }
  SECTION("random repair outsources tasks whose drawn combination cannot fit") {
    ReoptProblem p = fixtures::problem({task(1, at_minutes(30), SkillVector{1}, 5, 1, 0, 10)},
                                       {crew(1, SkillVector{1})});
    Solution sol = repair_random(p, empty_solution(p), {1}, rng);
    CHECK(sol.outsourced == std::set<int>{1});
    CHECK(sol.feasible());
  }
}

TEST_CASE("regret values follow the look-ahead formula") {
  CHECK(regret_value({10, 50}, 2) == Catch::Approx(40.0));
  CHECK(regret_value({10, 12}, 2) == Catch::Approx(2.0));
  CHECK(regret_value({7}, 2) == 0.0);         // min(n,|A_i|)=1 empties the sum
  CHECK(regret_value({5, 9, 20}, 3) == Catch::Approx(4 + 15.0));
  CHECK(regret_value({5, 9, 20}, 2) == Catch::Approx(4.0));
  CHECK(regret_value({}, 2) == -kInfinity);
}

TEST_CASE("regret repair reproduces a step-by-step replica of the selection rule") {
  auto problem = small_mixed_problem();
  Solution base = empty_solution(problem);
  std::vector<int> pending{1, 2, 3, 4, 5};

  // independent replica of the published selection rule
  Solution replica = base;
  std::vector<int> open = pending;
  while (!open.empty()) {
    int chosen = -1;
    double chosen_regret = -kInfinity;
    std::optional<InsertionCandidate> chosen_cand;
    for (int tid : open) {
      std::vector<double> deltas;
      std::optional<InsertionCandidate> best;
      for (const auto& combo : irreducible_combinations(problem.task(tid), problem.crews)) {
        auto cand = best_insertion(problem, replica, problem.task(tid), combo);
        if (!cand) continue;
        deltas.push_back(cand->delta_cost);
        if (!best || cand->delta_cost < best->delta_cost - 1e-9) best = cand;
      }
      double r = regret_value(deltas, 2);
      bool better = chosen == -1 || r > chosen_regret ||
                    (r == chosen_regret &&
                     problem.task(tid).priority > problem.task(chosen).priority);
      if (better) {
        chosen = tid;
        chosen_regret = r;
        chosen_cand = best;
      }
    }
    std::erase(open, chosen);
    if (chosen_cand)
      replica = apply_insertion(problem, replica, *chosen_cand);
    else {
      replica.outsourced.insert(chosen);
      replica = make_solution(problem, replica.routes, replica.outsourced);
    }
  }

  Solution repaired = repair_regret(problem, base, pending, 2);
  CHECK(repaired.twtt == Catch::Approx(replica.twtt));
  for (std::size_t i = 0; i < repaired.routes.size(); ++i)
    CHECK(repaired.routes[i].task_ids == replica.routes[i].task_ids);
}

TEST_CASE("acceptance criterion") {
  Rng rng(6);
  SECTION("improving and boundary cases") {
    for (int i = 0; i < 50; ++i) {
      CHECK(accept(-1.0, 100.0, rng));
      CHECK(accept(0.0, 100.0, rng));
    }
  }
  SECTION("worsening moves pass at the Boltzmann rate") {
    int accepted = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i)
      if (accept(100.0, 1000.0, rng)) ++accepted;
    double rate = static_cast<double>(accepted) / trials;
    CHECK(rate == Catch::Approx(std::exp(-0.1)).margin(0.02));
  }
}

TEST_CASE("weight updates clamp, normalize and stay positive") {
  AlnsParams params;
  OperatorBank bank;
  bank.destroy_weights = {0.5, 0.5, 0, 0, 0};
  bank.repair_weights = {0.5, 0.5, 0};
  normalize_clamped(bank.destroy_weights);
  normalize_clamped(bank.repair_weights);

  SECTION("the documented arithmetic example") {
    OperatorBank two;
    two.destroy_weights = {0.5, 0.5};
    two.repair_weights = {0.5, 0.5};
    update_weights(two, DestroyOp::RandomTask, RepairOp::Random, IterationOutcome::NewBest, params);
    CHECK(two.destroy_weights[0] == Catch::Approx(0.58 / 1.08));
    CHECK(two.destroy_weights[1] == Catch::Approx(0.5 / 1.08));
    CHECK(two.destroy_weights[0] == Catch::Approx(0.5370370370).epsilon(1e-6));
    CHECK(two.destroy_weights[1] == Catch::Approx(0.4629629629).epsilon(1e-6));
  }
  SECTION("repeated punishment never drives a weight below the floor") {
    OperatorBank b;
    for (int i = 0; i < 200; ++i) {
      update_weights(b, DestroyOp::Shaw, RepairOp::Regret, IterationOutcome::Rejected, params);
      for (double w : b.destroy_weights) CHECK(w > 0);
      // pre-normalization clamp at 0.01 bounds the share from below
      CHECK(b.destroy_weights[static_cast<int>(DestroyOp::Shaw)] >=
            kWeightFloor / (1.0 + params.sigma_new_best) - 1e-12);
    }
  }
  SECTION("positivity and normalization survive random update sequences") {
    Rng rng(8);
    OperatorBank b;
    for (int i = 0; i < 1000; ++i) {
      auto d = static_cast<DestroyOp>(uniform_index(rng, kDestroyCount));
      auto r = static_cast<RepairOp>(uniform_index(rng, kRepairCount));
      auto o = static_cast<IterationOutcome>(uniform_index(rng, 4));
      update_weights(b, d, r, o, params);
      double sum_d = 0, sum_r = 0;
      for (double w : b.destroy_weights) {
        CHECK(w > 0);
        sum_d += w;
      }
      for (double w : b.repair_weights) {
        CHECK(w > 0);
        sum_r += w;
      }
      CHECK(sum_d == Catch::Approx(1.0));
      CHECK(sum_r == Catch::Approx(1.0));
    }
  }
}

TEST_CASE("roulette selection") {
  Rng rng(9);
  SECTION("single entry") {
    std::vector<double> w{1.0};
    for (int i = 0; i < 10; ++i) CHECK(roulette_select(w, rng) == 0);
  }
  SECTION("overwhelming weight wins almost always") {
    std::vector<double> w{0.99, 0.01};
    int zero = 0;
    for (int i = 0; i < 1000; ++i)
      if (roulette_select(w, rng) == 0) ++zero;
    CHECK(zero > 950);
  }
  SECTION("frequencies follow the weights") {
    std::vector<double> w{0.5, 0.3, 0.2};
    std::vector<int> hits(3, 0);
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) hits[roulette_select(w, rng)]++;
    double chi2 = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double expected = trials * w[i];
      chi2 += (hits[i] - expected) * (hits[i] - expected) / expected;
    }
    CHECK(chi2 < 9.21);  // 2 dof, p=0.01
  }
}

TEST_CASE("zero iterations return the initial solution unchanged") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  AlnsParams params;
  params.max_iterations = 0;
  Solution out = run_alns(problem, initial, params);
  CHECK(out.twtt == initial.twtt);
  for (std::size_t i = 0; i < out.routes.size(); ++i)
    CHECK(out.routes[i].task_ids == initial.routes[i].task_ids);
}

TEST_CASE("identical seeds reproduce the best solution and the whole trace") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  AlnsParams params;
  params.max_iterations = 60;
  params.seed = 1234;

  AlnsTrace t1, t2;
  Solution a = run_alns(problem, initial, params, &t1);
  Solution b = run_alns(problem, initial, params, &t2);
  CHECK(a.twtt == b.twtt);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].destroy == t2[i].destroy);
    CHECK(t1[i].repair == t2[i].repair);
    CHECK(t1[i].candidate_twtt == t2[i].candidate_twtt);
    CHECK(t1[i].temperature == t2[i].temperature);
    CHECK(t1[i].outcome == t2[i].outcome);
  }
}

TEST_CASE("the ALNS loop keeps its invariants and cools only on accepted non-improving moves") {
  auto problem = small_mixed_problem();
  Solution initial = initial_for(problem);
  AlnsParams params;
  params.max_iterations = 120;
  params.max_non_improving = 120;
  params.seed = 77;

  AlnsTrace trace;
  Solution best = run_alns(problem, initial, params, &trace);
  CHECK(best.twtt <= initial.twtt + 1e-9);
  CHECK(best.feasible());
  CHECK(check_feasibility(problem, best).empty());

  double prev_best = initial.twtt;
  double prev_temp = params.initial_temperature;
  for (const auto& rec : trace) {
    CHECK(rec.best_twtt <= prev_best + 1e-9);  // best never degrades
    prev_best = rec.best_twtt;
    bool accepted_non_improving = rec.outcome == IterationOutcome::Accepted;
    if (accepted_non_improving)
      CHECK(rec.temperature == Catch::Approx(prev_temp * params.cooling));
    else
      CHECK(rec.temperature == prev_temp);
    CHECK(rec.temperature > 0);
    prev_temp = rec.temperature;
  }
}

TEST_CASE("ALNS finds the enumerated optimum on tiny instances") {
  int matched = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    SuperInstance super = generate_super(4, 2, 1, seed, 3);
    ReoptProblem problem = static_problem(super, true);
    Solution ch = construct_initial(problem);
    AlnsParams params;
    params.seed = seed;
    Solution best = run_alns(problem, ch, params);
    auto oracle_best = oracle::oracle_optimum(problem);
    REQUIRE(oracle_best.found);
    ++total;
    CHECK(best.twtt >= oracle_best.twtt - 1e-9);
    if (best.twtt <= oracle_best.twtt + 1e-9) ++matched;
  }
  CHECK(matched == total);
}
