#pragma once

#include "dwsrp/core.hpp"
#include "dwsrp/rng.hpp"

namespace dwsrp {

// A full working day: every task with its arrival time, plus the crews.
struct SuperInstance {
  std::uint64_t seed{};
  int n{};
  int k{};
  int d{};  // interval count; delta = (n - floor(n/d)) / n
  int skill_count = 5;
  double tau_max = 540.0;
  double speed_kmh = 30.0;
  Point depot{12.5, 12.5};
  std::vector<Task> tasks;  // ids 1..n, static block first
  std::vector<Crew> crews;  // ids 1..k
  double delta{};
  double delta_e{};
  double delta_e_tw{};
  int n_sync{};  // tasks no single crew covers
};

struct DynamismMetrics {
  double delta{};
  double delta_e{};
  double delta_e_tw{};
};

// delta: share of tasks revealed after time 0. delta_e: mean a_i / tau_max.
// delta_e_tw: mean 1 - (l_i - a_i) / tau_max.
inline DynamismMetrics dynamism_metrics(const SuperInstance& super) {
  DynamismMetrics m;
  if (super.tasks.empty()) return m;
  double n = static_cast<double>(super.tasks.size());
  for (const auto& t : super.tasks) {
    if (t.arrival > 0) m.delta += 1.0;
    m.delta_e += t.arrival / super.tau_max;
    m.delta_e_tw += 1.0 - (t.latest - t.arrival) / super.tau_max;
  }
  m.delta /= n;
  m.delta_e /= n;
  m.delta_e_tw /= n;
  for (double v : {m.delta, m.delta_e, m.delta_e_tw})
    if (v < -kTimeTol || v > 1 + kTimeTol)
      throw std::logic_error("dynamism metric out of [0,1]");
  return m;
}

namespace detail {

// Per-field RNG streams; tasks are always consumed in ascending id order, so
// a seed pins the instance bytes on every platform.
enum StreamId : std::uint64_t {
  kArrivalStream = 1,
  kWindowStream,
  kProcessStream,
  kPriorityStream,
  kLocationStream,
  kTaskSkillStream,
  kCrewSkillStream,
};

inline SkillVector draw_skills(Rng& rng, int skill_count) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(skill_count), 0);
  bool any = false;
  for (auto& b : bits) {
    b = uniform_unit(rng) <= 0.5 ? 1 : 0;
    any = any || b;
  }
  if (!any) bits[uniform_index(rng, bits.size())] = 1;  // a skill is forced if none drawn
  return SkillVector(bits);
}

}  // namespace detail

// Generates a super-instance: floor(n/d) static tasks at a = 0; intervals
// 1..d-1 each hold floor(n/d) tasks with arrivals in
// ((tau_max/d)(t-1), (tau_max/d)t]; the remaining n - d*floor(n/d) land in
// the final interval. e = a, l = min(a + U(10,50), tau_max), p ~ U(5,25),
// w ~ U(1,5), locations uniform on the 25 km square, skill bits at
// probability one half with a forced bit when none is drawn.
inline SuperInstance generate_super(int n, int k, int d, std::uint64_t seed, int skill_count = 5) {
  if (n < 1 || k < 1 || d < 1 || d > n || skill_count < 1)
    throw std::invalid_argument("generate_super: need n >= d >= 1, k >= 1, skills >= 1");

  SuperInstance super;
  super.seed = seed;
  super.n = n;
  super.k = k;
  super.d = d;
  super.skill_count = skill_count;

  const int static_count = n / d;
  const double interval_len = super.tau_max / d;

  // arrivals
  std::vector<double> arrivals(static_cast<std::size_t>(n), 0.0);
  {
    Rng rng = stream_rng(seed, detail::kArrivalStream);
    int next = static_count;
    for (int t = 1; t <= d && next < n; ++t) {
      int batch = t < d ? n / d : n - next;  // the last interval takes what is left
      double lo = interval_len * (t - 1), hi = t == d ? super.tau_max : interval_len * t;
      for (int i = 0; i < batch && next < n; ++i, ++next)
        arrivals[static_cast<std::size_t>(next)] = hi - uniform_unit(rng) * (hi - lo);  // in (lo, hi]
    }
  }

  super.tasks.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Task& t = super.tasks[static_cast<std::size_t>(i)];
    t.id = i + 1;
    t.arrival = arrivals[static_cast<std::size_t>(i)];
    t.earliest = t.arrival;
  }
  {
    Rng rng = stream_rng(seed, detail::kWindowStream);
    for (auto& t : super.tasks)
      t.latest = std::min(t.arrival + uniform_real(rng, 10.0, 50.0), super.tau_max);
  }
  {
    Rng rng = stream_rng(seed, detail::kProcessStream);
    for (auto& t : super.tasks) t.process = uniform_real(rng, 5.0, 25.0);
  }
  {
    Rng rng = stream_rng(seed, detail::kPriorityStream);
    for (auto& t : super.tasks) t.priority = uniform_real(rng, 1.0, 5.0);
  }
  {
    Rng rng = stream_rng(seed, detail::kLocationStream);
    for (auto& t : super.tasks) {
      t.location.x = uniform_real(rng, 0.0, 25.0);
      t.location.y = uniform_real(rng, 0.0, 25.0);
    }
  }
  {
    Rng rng = stream_rng(seed, detail::kTaskSkillStream);
    for (auto& t : super.tasks) t.skills = detail::draw_skills(rng, skill_count);
  }
  {
    Rng rng = stream_rng(seed, detail::kCrewSkillStream);
    super.crews.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      super.crews[static_cast<std::size_t>(i)].id = i + 1;
      super.crews[static_cast<std::size_t>(i)].skills = detail::draw_skills(rng, skill_count);
    }
  }

  super.delta = static_cast<double>(n - static_count) / n;
  DynamismMetrics m = dynamism_metrics(super);
  super.delta_e = m.delta_e;
  super.delta_e_tw = m.delta_e_tw;
  super.n_sync = 0;
  for (const auto& t : super.tasks) {
    bool single = false;
    for (const auto& c : super.crews)
      if (crew_covers(c, t)) {
        single = true;
        break;
      }
    if (!single) ++super.n_sync;
  }
  return super;
}

// Smallest interval count whose realized delta is closest to the request.
// Exact targets are only sometimes attainable under the floor(n/d) protocol;
// callers should report the realized value.
inline int pick_interval_count(int n, double requested_delta) {
  if (n < 1) throw std::invalid_argument("pick_interval_count: need n >= 1");
  int best_d = 1;
  double best_err = kInfinity;
  for (int d = 1; d <= n; ++d) {
    double realized = static_cast<double>(n - n / d) / n;
    double err = std::abs(realized - requested_delta);
    if (err < best_err - 1e-12) {
      best_err = err;
      best_d = d;
    }
  }
  return best_d;
}

// Loose variant: every deadline relaxed to tau_max; idempotent.
inline SuperInstance loosen(const SuperInstance& super) {
  SuperInstance loose = super;
  for (auto& t : loose.tasks) t.latest = loose.tau_max;
  DynamismMetrics m = dynamism_metrics(loose);
  loose.delta_e = m.delta_e;
  loose.delta_e_tw = m.delta_e_tw;
  return loose;
}

// Maximum pairwise travel time over task and depot locations, in minutes.
inline double max_travel_minutes(const SuperInstance& super) {
  TravelModel travel{super.speed_kmh};
  std::vector<Point> points{super.depot};
  for (const auto& t : super.tasks) points.push_back(t.location);
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::max(best, travel.minutes(points[i], points[j]));
  return best;
}

inline double max_process_minutes(const SuperInstance& super) {
  double best = 0.0;
  for (const auto& t : super.tasks) best = std::max(best, t.process);
  return best;
}

// Static view of a super-instance: all crews at the depot at time 0.
// `all_tasks` keeps the whole day (the clairvoyant single-period problem);
// otherwise only the initially known tasks remain.
inline ReoptProblem static_problem(const SuperInstance& super, bool all_tasks) {
  ReoptProblem problem;
  problem.epoch_start = 0.0;
  problem.horizon_end = super.tau_max;
  problem.depot = super.depot;
  problem.travel.speed_kmh = super.speed_kmh;
  problem.crews = super.crews;
  for (const auto& c : super.crews) problem.crew_states.push_back({c.id, super.depot, 0.0});
  for (const auto& t : super.tasks)
    if (all_tasks || t.arrival <= kTimeTol) problem.tasks.push_back(t);
  problem.validate(!all_tasks);
  return problem;
}

}  // namespace dwsrp
