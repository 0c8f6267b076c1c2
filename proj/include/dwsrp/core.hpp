#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwsrp {

// Absolute tolerance for all feasibility comparisons, in minutes.
inline constexpr double kTimeTol = 1e-6;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Point {
  double x{};
  double y{};
};

inline double rectilinear_km(const Point& a, const Point& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// Rectilinear travel metric. Times are fractional minutes and never rounded.
struct TravelModel {
  double speed_kmh = 30.0;

  double minutes(const Point& a, const Point& b) const {
    return rectilinear_km(a, b) / speed_kmh * 60.0;
  }
};

// Fixed-length boolean skill vector; one entry per skill q.
class SkillVector {
 public:
  SkillVector() = default;
  explicit SkillVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  SkillVector(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) bits_.push_back(b ? 1 : 0);
  }

  std::size_t size() const { return bits_.size(); }
  bool has(std::size_t q) const { return bits_.at(q) != 0; }
  void set(std::size_t q, bool v) { bits_.at(q) = v ? 1 : 0; }

  bool any() const {
    return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
  }

  // True iff this vector (a capability) provides every skill `req` demands.
  bool covers(const SkillVector& req) const {
    if (size() != req.size())
      throw std::invalid_argument("skill vector length mismatch: " + std::to_string(size()) +
                                  " vs " + std::to_string(req.size()));
    for (std::size_t q = 0; q < bits_.size(); ++q)
      if (req.bits_[q] && !bits_[q]) return false;
    return true;
  }

  void merge(const SkillVector& other) {
    if (size() != other.size()) throw std::invalid_argument("skill vector length mismatch");
    for (std::size_t q = 0; q < bits_.size(); ++q)
      if (other.bits_[q]) bits_[q] = 1;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const SkillVector& other) const { return bits_ == other.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

// A service request.
struct Task {
  int id{};
  double arrival{};   // a_i, minutes from day start
  double process{};   // p_i > 0
  double priority{};  // w_i > 0
  double earliest{};  // e_i
  double latest{};    // l_i, window constrains the start time
  Point location{};
  SkillVector skills;  // u_i
};

struct Crew {
  int id{};
  SkillVector skills;  // v_k
};

// Where and when a crew enters a reoptimization epoch.
struct CrewState {
  int crew_id{};
  Point start_location{};
  double ready_time{};
};

// One static subproblem: the free tasks, the crews' start states and the
// remaining horizon.
struct ReoptProblem {
  double epoch_start{};       // tau
  double horizon_end{540.0};  // tau_max
  std::vector<Task> tasks;    // the free set
  std::vector<Crew> crews;
  std::vector<CrewState> crew_states;  // exactly one per crew
  Point depot{};
  TravelModel travel;

  const Task* find_task(int id) const {
    for (const auto& t : tasks)
      if (t.id == id) return &t;
    return nullptr;
  }
  const Task& task(int id) const {
    if (const Task* t = find_task(id)) return *t;
    throw std::invalid_argument("unknown task id " + std::to_string(id));
  }
  const Crew& crew(int id) const {
    for (const auto& c : crews)
      if (c.id == id) return c;
    throw std::invalid_argument("unknown crew id " + std::to_string(id));
  }
  const CrewState& state(int crew_id) const {
    for (const auto& s : crew_states)
      if (s.crew_id == crew_id) return s;
    throw std::invalid_argument("no crew state for crew " + std::to_string(crew_id));
  }

  // Structural checks; `require_revealed` additionally enforces a_i <= tau,
  // which holds for epochs produced by the simulator but not for the
  // clairvoyant whole-day problem the CLI can solve.
  void validate(bool require_revealed = false) const {
    if (crew_states.size() != crews.size())
      throw std::invalid_argument("expected exactly one crew state per crew");
    for (const auto& c : crews) state(c.id);
    std::set<int> task_ids, crew_ids;
    for (const auto& c : crews)
      if (!crew_ids.insert(c.id).second)
        throw std::invalid_argument("duplicate crew id " + std::to_string(c.id));
    for (const auto& s : crew_states)
      if (s.ready_time < epoch_start - kTimeTol)
        throw std::invalid_argument("crew ready before epoch start");
    for (const auto& t : tasks) {
      if (!task_ids.insert(t.id).second)
        throw std::invalid_argument("duplicate task id " + std::to_string(t.id));
      if (t.process <= 0 || t.priority <= 0)
        throw std::invalid_argument("task " + std::to_string(t.id) + ": p and w must be positive");
      if (t.arrival < 0 || t.arrival > t.earliest + kTimeTol || t.earliest > t.latest + kTimeTol ||
          t.latest > horizon_end + kTimeTol)
        throw std::invalid_argument("task " + std::to_string(t.id) +
                                    ": need 0 <= a <= e <= l <= tau_max");
      if (!t.skills.any())
        throw std::invalid_argument("task " + std::to_string(t.id) + ": empty skill requirement");
      if (require_revealed && t.arrival > epoch_start + kTimeTol)
        throw std::invalid_argument("task " + std::to_string(t.id) + " not yet revealed");
    }
  }
};

// Ordered task sequence of one crew (the crew's Team Task Plan).
struct Route {
  int crew_id{};
  std::vector<int> task_ids;
};

struct CrewVisit {
  int task_id{};
  double arrival{};
  double idle{};  // start - arrival
};

// Timing of an evaluated set of routes.
struct Schedule {
  std::map<int, double> start;        // per in-house task
  std::map<int, double> completion;   // start + p
  std::map<int, std::vector<CrewVisit>> visits;  // per crew, in route order
  std::map<int, double> return_time;  // per crew, arrival back at the depot
};

enum class InfeasibilityKind { WindowViolation, LateReturn, SyncDeadlock };

struct Infeasibility {
  InfeasibilityKind kind{};
  std::vector<int> task_ids;  // the offending task, or the deadlock cycle
  int crew_id = -1;
  double amount = 0.0;  // minutes past the violated bound
  std::string message;
};

struct EvalResult {
  Schedule schedule;
  std::vector<Infeasibility> issues;
  bool feasible() const { return issues.empty(); }
};

// Evaluates coupled routes by readiness propagation. A task is scheduled
// once it is at the front of every assigned crew's remaining route; its start
// is max(e_i, latest crew arrival), so early arrivers idle. Departure equals
// completion. If propagation stalls before all route entries are scheduled,
// two or more routes wait on each other and the evaluation reports the cycle.
inline EvalResult evaluate_schedule(const ReoptProblem& problem, const std::vector<Route>& routes,
                                    [[maybe_unused]] const std::set<int>& outsourced) {
  EvalResult result;

  struct CrewCursor {
    int crew_id{};
    const Route* route{};
    std::size_t pos = 0;
    Point location{};
    double clock{};
  };
  std::vector<CrewCursor> cursors;
  cursors.reserve(routes.size());
  for (const auto& r : routes) {
    const CrewState& st = problem.state(r.crew_id);
    cursors.push_back({r.crew_id, &r, 0, st.start_location, st.ready_time});
    result.schedule.visits[r.crew_id];  // materialize, keeps empty routes visible
  }

  // crews assigned to each task, in route-list order
  std::map<int, std::vector<std::size_t>> assigned;
  std::size_t total_entries = 0;
  for (std::size_t c = 0; c < cursors.size(); ++c) {
    for (int tid : cursors[c].route->task_ids) {
      problem.task(tid);  // throws on unknown ids
      assigned[tid].push_back(c);
      ++total_entries;
    }
  }

  // ready_hits[t] counts crews whose front is t; t is ready when all are.
  std::map<int, std::size_t> ready_hits;
  std::set<int> ready;  // ascending task id, for determinism
  auto bump_front = [&](std::size_t c) {
    const CrewCursor& cur = cursors[c];
    if (cur.pos >= cur.route->task_ids.size()) return;
    int tid = cur.route->task_ids[cur.pos];
    if (++ready_hits[tid] == assigned[tid].size()) ready.insert(tid);
  };
  for (std::size_t c = 0; c < cursors.size(); ++c) bump_front(c);

  std::size_t scheduled_entries = 0;
  while (!ready.empty()) {
    int tid = *ready.begin();
    ready.erase(ready.begin());
    const Task& task = problem.task(tid);

    double start = task.earliest;
    for (std::size_t c : assigned[tid]) {
      double arr = cursors[c].clock + problem.travel.minutes(cursors[c].location, task.location);
      start = std::max(start, arr);
    }
    double completion = start + task.process;
    result.schedule.start[tid] = start;
    result.schedule.completion[tid] = completion;

    for (std::size_t c : assigned[tid]) {
      CrewCursor& cur = cursors[c];
      double arr = cur.clock + problem.travel.minutes(cur.location, task.location);
      result.schedule.visits[cur.crew_id].push_back({tid, arr, start - arr});
      cur.clock = completion;
      cur.location = task.location;
      ++cur.pos;
      ++scheduled_entries;
      bump_front(c);
    }

    if (start > task.latest + kTimeTol) {
      result.issues.push_back({InfeasibilityKind::WindowViolation,
                               {tid},
                               -1,
                               start - task.latest,
                               "task " + std::to_string(tid) + " starts after its deadline"});
    }
  }

  if (scheduled_entries < total_entries) {
    // Walk blocking fronts from any stalled crew until a task repeats.
    std::vector<int> chain;
    std::set<int> seen;
    int probe = -1;
    for (const auto& cur : cursors)
      if (cur.pos < cur.route->task_ids.size()) {
        probe = cur.route->task_ids[cur.pos];
        break;
      }
    while (probe != -1 && seen.insert(probe).second) {
      chain.push_back(probe);
      int next = -1;
      for (std::size_t c : assigned[probe]) {
        int front = cursors[c].route->task_ids[cursors[c].pos];
        if (front != probe) {
          next = front;
          break;
        }
      }
      probe = next;
    }
    if (probe != -1) {  // trim the lead-in, keep the cycle proper
      auto it = std::find(chain.begin(), chain.end(), probe);
      chain.erase(chain.begin(), it);
    }
    result.issues.push_back({InfeasibilityKind::SyncDeadlock, chain, -1, 0.0,
                             "synchronization deadlock: routes wait on each other"});
    return result;
  }

  for (auto& cur : cursors) {
    double ret = cur.clock + problem.travel.minutes(cur.location, problem.depot);
    result.schedule.return_time[cur.crew_id] = ret;
    if (ret > problem.horizon_end + kTimeTol) {
      result.issues.push_back({InfeasibilityKind::LateReturn,
                               {},
                               cur.crew_id,
                               ret - problem.horizon_end,
                               "crew " + std::to_string(cur.crew_id) + " returns after tau_max"});
    }
  }
  return result;
}

// Eq. (1): weighted throughput over the tasks the schedule and the
// outsourced set actually account for. Outsourced tasks complete at tau_max.
inline double twtt(const ReoptProblem& problem, const Schedule& schedule,
                   const std::set<int>& outsourced) {
  double total = 0.0;
  for (const auto& [tid, completion] : schedule.completion)
    total += problem.task(tid).priority * (completion - problem.task(tid).arrival);
  for (int tid : outsourced)
    total += problem.task(tid).priority * (problem.horizon_end - problem.task(tid).arrival);
  return total;
}

// Per-crew routes plus the outsourced set, with the evaluated timing.
struct Solution {
  std::vector<Route> routes;
  std::set<int> outsourced;
  std::optional<Schedule> schedule;  // nullopt marks an unevaluated/infeasible plan
  std::vector<Infeasibility> issues;
  double twtt = kInfinity;

  bool feasible() const { return schedule.has_value() && issues.empty(); }

  bool in_house(int task_id) const {
    for (const auto& r : routes)
      if (std::find(r.task_ids.begin(), r.task_ids.end(), task_id) != r.task_ids.end())
        return true;
    return false;
  }
  std::set<int> in_house_ids() const {
    std::set<int> ids;
    for (const auto& r : routes) ids.insert(r.task_ids.begin(), r.task_ids.end());
    return ids;
  }
  std::vector<int> crews_of(int task_id) const {
    std::vector<int> ids;
    for (const auto& r : routes)
      if (std::find(r.task_ids.begin(), r.task_ids.end(), task_id) != r.task_ids.end())
        ids.push_back(r.crew_id);
    return ids;
  }
};

// Evaluates routes/outsourced into a Solution; twtt is set only when feasible.
inline Solution make_solution(const ReoptProblem& problem, std::vector<Route> routes,
                              std::set<int> outsourced) {
  Solution sol;
  sol.routes = std::move(routes);
  sol.outsourced = std::move(outsourced);
  EvalResult eval = evaluate_schedule(problem, sol.routes, sol.outsourced);
  sol.issues = eval.issues;
  sol.schedule = std::move(eval.schedule);
  sol.twtt = sol.issues.empty() ? twtt(problem, *sol.schedule, sol.outsourced) : kInfinity;
  return sol;
}

inline Solution empty_solution(const ReoptProblem& problem) {
  std::vector<Route> routes;
  routes.reserve(problem.crews.size());
  for (const auto& c : problem.crews) routes.push_back({c.id, {}});
  return make_solution(problem, std::move(routes), {});
}

// True iff the crew provides every skill the task requires.
inline bool crew_covers(const Crew& crew, const Task& task) {
  return crew.skills.covers(task.skills);
}

// Every minimal crew subset whose combined skills cover the task; empty when
// no subset covers (the task can only be outsourced). Sets are returned
// sorted by size, then lexicographically by crew id.
inline std::vector<std::vector<int>> irreducible_combinations(const Task& task,
                                                              const std::vector<Crew>& crews) {
  const std::size_t k = crews.size();
  if (k == 0) throw std::invalid_argument("irreducible_combinations: no crews");
  if (k > 20) throw std::invalid_argument("irreducible_combinations: too many crews");

  std::vector<std::uint32_t> covering;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    SkillVector merged(std::vector<std::uint8_t>(task.skills.size(), 0));
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) merged.merge(crews[i].skills);
    if (merged.covers(task.skills)) covering.push_back(mask);
  }

  std::vector<std::vector<int>> result;
  for (std::uint32_t mask : covering) {
    bool minimal = true;
    for (std::uint32_t sub : covering) {
      if (sub != mask && (sub & mask) == sub) {
        minimal = false;
        break;
      }
    }
    if (!minimal) continue;
    std::vector<int> ids;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) ids.push_back(crews[i].id);
    std::sort(ids.begin(), ids.end());
    result.push_back(std::move(ids));
  }
  std::sort(result.begin(), result.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return result;
}

struct Violation {
  std::string eq;  // the MIP constraint family this mirrors, e.g. "Eq(8)"
  std::string message;
  std::vector<int> task_ids;
  int crew_id = -1;
};

// Validates a solution against the full constraint set: partition (Eqs. 2-3),
// skill cover (Eq. 8), time windows (Eqs. 12-13), timing consistency against
// a re-evaluation (Eqs. 9-11), and depot return (Eq. 5). Violations are data,
// not errors.
inline std::vector<Violation> check_feasibility(const ReoptProblem& problem,
                                                const Solution& solution) {
  std::vector<Violation> violations;
  auto add = [&](std::string eq, std::string msg, std::vector<int> tasks = {}, int crew = -1) {
    violations.push_back({std::move(eq), std::move(msg), std::move(tasks), crew});
  };

  std::map<int, std::vector<int>> crews_of;
  for (const auto& r : solution.routes) {
    std::set<int> seen;
    for (int tid : r.task_ids) {
      if (!seen.insert(tid).second)
        add("Eq(7)", "task " + std::to_string(tid) + " appears twice in route of crew " +
                         std::to_string(r.crew_id),
            {tid}, r.crew_id);
      crews_of[tid].push_back(r.crew_id);
    }
  }

  for (const auto& t : problem.tasks) {
    bool routed = crews_of.count(t.id) > 0;
    bool out = solution.outsourced.count(t.id) > 0;
    if (!routed && !out)
      add("Eq(2)", "task " + std::to_string(t.id) + " neither assigned nor outsourced", {t.id});
    if (routed && out)
      add("Eq(3)", "task " + std::to_string(t.id) + " both assigned and outsourced", {t.id});
    if (routed) {
      SkillVector merged(std::vector<std::uint8_t>(t.skills.size(), 0));
      for (int cid : crews_of[t.id]) merged.merge(problem.crew(cid).skills);
      if (!merged.covers(t.skills))
        add("Eq(8)", "assigned crews do not cover skills of task " + std::to_string(t.id), {t.id});
    }
  }
  for (const auto& [tid, crews] : crews_of) {
    (void)crews;
    if (!problem.find_task(tid)) add("Eq(6)", "route references unknown task " + std::to_string(tid), {tid});
  }
  if (!violations.empty() &&
      std::any_of(violations.begin(), violations.end(), [](const Violation& v) { return v.eq == "Eq(6)"; }))
    return violations;  // timing checks are meaningless with unknown ids

  EvalResult eval = evaluate_schedule(problem, solution.routes, solution.outsourced);
  for (const auto& issue : eval.issues) {
    switch (issue.kind) {
      case InfeasibilityKind::WindowViolation:
        break;  // reported below from the schedule, with Eq tags
      case InfeasibilityKind::LateReturn:
        add("Eq(5)", issue.message, {}, issue.crew_id);
        break;
      case InfeasibilityKind::SyncDeadlock:
        add("Eq(9)", issue.message, issue.task_ids);
        break;
    }
  }
  for (const auto& [tid, start] : eval.schedule.start) {
    const Task& t = problem.task(tid);
    if (start < t.earliest - kTimeTol)
      add("Eq(13)", "task " + std::to_string(tid) + " starts before e_i", {tid});
    if (start > t.latest + kTimeTol)
      add("Eq(12)", "task " + std::to_string(tid) + " starts after l_i", {tid});
  }
  if (solution.schedule.has_value()) {
    for (const auto& [tid, start] : solution.schedule->start) {
      auto it = eval.schedule.start.find(tid);
      if (it == eval.schedule.start.end() || std::abs(it->second - start) > 1e-4)
        add("Eq(9)", "stored start of task " + std::to_string(tid) +
                         " disagrees with propagated timing",
            {tid});
    }
  }
  return violations;
}

}  // namespace dwsrp
