#pragma once

// Compact builders shared by the test suites.

#include "dwsrp/core.hpp"

namespace fixtures {

using dwsrp::Crew;
using dwsrp::CrewState;
using dwsrp::Point;
using dwsrp::ReoptProblem;
using dwsrp::SkillVector;
using dwsrp::Task;

inline Task task(int id, Point loc, SkillVector skills, double p = 10, double w = 1, double e = 0,
                 double l = 540, double a = 0) {
  Task t;
  t.id = id;
  t.arrival = a;
  t.earliest = e;
  t.latest = l;
  t.process = p;
  t.priority = w;
  t.location = loc;
  t.skills = std::move(skills);
  return t;
}

inline Crew crew(int id, SkillVector skills) { return Crew{id, std::move(skills)}; }

// All crews start at the depot at time 0; horizon 540; 30 km/h rectilinear.
inline ReoptProblem problem(std::vector<Task> tasks, std::vector<Crew> crews,
                            Point depot = {0, 0}, double tau = 0, double tau_max = 540) {
  ReoptProblem p;
  p.epoch_start = tau;
  p.horizon_end = tau_max;
  p.depot = depot;
  p.tasks = std::move(tasks);
  p.crews = crews;
  for (const auto& c : crews) p.crew_states.push_back(CrewState{c.id, depot, tau});
  return p;
}

// Travel at 30 km/h: one km of rectilinear distance costs two minutes, so a
// point at x = m/2 km is m minutes from the origin.
inline Point at_minutes(double m) { return Point{m / 2.0, 0.0}; }

}  // namespace fixtures
