#pragma once

// Test-only oracles, independent of the library's evaluation path.
//
// - des_simulate: a discrete-event simulation that advances whichever crew
//   action can start earliest in wall-clock order. The library evaluator
//   propagates readiness instead; agreement of the two is asserted in tests.
// - oracle_optimum: exhaustive enumeration of outsourcing choices, minimal
//   covering crew combinations and per-crew permutations, timed by the DES
//   simulator. Defines the optimum on tiny instances.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dwsrp/core.hpp"

namespace oracle {

using dwsrp::Crew;
using dwsrp::Point;
using dwsrp::ReoptProblem;
using dwsrp::Route;
using dwsrp::Solution;
using dwsrp::Task;

struct DesResult {
  bool feasible = true;
  std::string reason;
  std::map<int, double> start;
  std::map<int, double> completion;
  std::map<int, double> return_time;
  double twtt = dwsrp::kInfinity;
};

inline DesResult des_simulate(const ReoptProblem& problem, const std::vector<Route>& routes,
                              const std::set<int>& outsourced) {
  struct CrewSim {
    int crew_id;
    const std::vector<int>* seq;
    std::size_t pos = 0;
    double clock;
    Point location;
  };
  std::vector<CrewSim> crews;
  for (const auto& r : routes) {
    const auto& st = problem.state(r.crew_id);
    crews.push_back({r.crew_id, &r.task_ids, 0, st.ready_time, st.start_location});
  }
  std::map<int, int> needed;  // how many crews serve each task
  for (const auto& r : routes)
    for (int tid : r.task_ids) needed[tid]++;

  DesResult res;
  while (true) {
    // candidate actions: next task of each crew, startable only if every
    // serving crew is currently poised at it
    int best_task = -1;
    double best_start = dwsrp::kInfinity;
    bool any_pending = false;
    std::map<int, std::vector<const CrewSim*>> poised;
    for (const auto& c : crews)
      if (c.pos < c.seq->size()) {
        any_pending = true;
        poised[(*c.seq)[c.pos]].push_back(&c);
      }
    if (!any_pending) break;
    for (const auto& [tid, list] : poised) {
      if (static_cast<int>(list.size()) != needed[tid]) continue;  // partners busy elsewhere
      const Task& t = problem.task(tid);
      double start = t.earliest;
      for (const CrewSim* c : list)
        start = std::max(start, c->clock + problem.travel.minutes(c->location, t.location));
      if (start < best_start - 1e-12 || (std::abs(start - best_start) <= 1e-12 && tid < best_task)) {
        best_start = start;
        best_task = tid;
      }
    }
    if (best_task == -1) {
      res.feasible = false;
      res.reason = "deadlock";
      return res;
    }
    const Task& t = problem.task(best_task);
    if (best_start > t.latest + dwsrp::kTimeTol) {
      res.feasible = false;
      res.reason = "window";
      return res;
    }
    res.start[best_task] = best_start;
    res.completion[best_task] = best_start + t.process;
    for (auto& c : crews) {
      if (c.pos < c.seq->size() && (*c.seq)[c.pos] == best_task) {
        c.clock = best_start + t.process;
        c.location = t.location;
        ++c.pos;
      }
    }
  }
  for (auto& c : crews) {
    double ret = c.clock + problem.travel.minutes(c.location, problem.depot);
    res.return_time[c.crew_id] = ret;
    if (ret > problem.horizon_end + dwsrp::kTimeTol) {
      res.feasible = false;
      res.reason = "late return";
      return res;
    }
  }
  res.twtt = 0.0;
  for (const auto& [tid, completion] : res.completion)
    res.twtt += problem.task(tid).priority * (completion - problem.task(tid).arrival);
  for (int tid : outsourced)
    res.twtt += problem.task(tid).priority * (problem.horizon_end - problem.task(tid).arrival);
  return res;
}

// Minimal covering crew-id sets by plain subset filtering.
inline std::vector<std::vector<int>> brute_min_covers(const Task& task,
                                                      const std::vector<Crew>& crews) {
  const std::size_t k = crews.size();
  auto covers = [&](unsigned mask) {
    for (std::size_t q = 0; q < task.skills.size(); ++q) {
      if (!task.skills.has(q)) continue;
      bool got = false;
      for (std::size_t i = 0; i < k; ++i)
        if ((mask & (1u << i)) && crews[i].skills.has(q)) got = true;
      if (!got) return false;
    }
    return true;
  };
  std::vector<unsigned> good;
  for (unsigned mask = 1; mask < (1u << k); ++mask)
    if (covers(mask)) good.push_back(mask);
  std::vector<std::vector<int>> out;
  for (unsigned mask : good) {
    bool minimal = true;
    for (unsigned other : good)
      if (other != mask && (other & mask) == other) minimal = false;
    if (!minimal) continue;
    std::vector<int> ids;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) ids.push_back(crews[i].id);
    std::sort(ids.begin(), ids.end());
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

struct OracleBest {
  double twtt = dwsrp::kInfinity;
  std::vector<Route> routes;
  std::set<int> outsourced;
  bool found = false;
};

// Exhaustive optimum: every task is outsourced or served by one of its
// minimal covering combinations; every per-crew order is tried.
inline OracleBest oracle_optimum(const ReoptProblem& problem) {
  OracleBest best;
  std::vector<const Task*> tasks;
  for (const auto& t : problem.tasks) tasks.push_back(&t);

  // option 0 = outsource, option i>0 = i-th minimal cover
  std::vector<std::vector<std::vector<int>>> covers;
  for (const Task* t : tasks) covers.push_back(brute_min_covers(*t, problem.crews));

  std::vector<std::size_t> choice(tasks.size(), 0);
  while (true) {
    std::set<int> outsourced;
    std::map<int, std::vector<int>> crew_tasks;
    for (const auto& c : problem.crews) crew_tasks[c.id];
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (choice[i] == 0) {
        outsourced.insert(tasks[i]->id);
      } else {
        for (int cid : covers[i][choice[i] - 1]) crew_tasks[cid].push_back(tasks[i]->id);
      }
    }

    // try every per-crew permutation (recursively over crews)
    std::vector<int> crew_ids;
    for (const auto& [cid, list] : crew_tasks) {
      (void)list;
      crew_ids.push_back(cid);
    }
    std::vector<std::vector<int>> perm(crew_ids.size());
    for (std::size_t c = 0; c < crew_ids.size(); ++c) {
      perm[c] = crew_tasks[crew_ids[c]];
      std::sort(perm[c].begin(), perm[c].end());
    }
    auto evaluate_perm = [&]() {
      std::vector<Route> routes;
      for (std::size_t c = 0; c < crew_ids.size(); ++c) routes.push_back({crew_ids[c], perm[c]});
      DesResult res = des_simulate(problem, routes, outsourced);
      if (res.feasible && res.twtt < best.twtt - 1e-12) {
        best.twtt = res.twtt;
        best.routes = routes;
        best.outsourced = outsourced;
        best.found = true;
      }
    };
    std::function<void(std::size_t)> rec = [&](std::size_t c) {
      if (c == perm.size()) {
        evaluate_perm();
        return;
      }
      std::sort(perm[c].begin(), perm[c].end());
      do {
        rec(c + 1);
      } while (std::next_permutation(perm[c].begin(), perm[c].end()));
    };
    rec(0);

    // odometer over choices
    std::size_t i = 0;
    for (; i < choice.size(); ++i) {
      if (choice[i] < covers[i].size()) {
        ++choice[i];
        break;
      }
      choice[i] = 0;
    }
    if (i == choice.size()) break;
  }
  return best;
}

}  // namespace oracle
