#pragma once

#include <fstream>

#include <json.hpp>

#include "dwsrp/core.hpp"
#include "dwsrp/dynamics.hpp"
#include "dwsrp/instgen.hpp"

namespace dwsrp {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "dwsrp-1";

namespace iodetail {

inline Json skills_to_json(const SkillVector& sv) {
  Json arr = Json::array();
  for (std::size_t q = 0; q < sv.size(); ++q) arr.push_back(sv.has(q) ? 1 : 0);
  return arr;
}

inline SkillVector skills_from_json(const Json& arr) {
  if (!arr.is_array() || arr.empty()) throw std::runtime_error("skills must be a non-empty array");
  std::vector<std::uint8_t> bits;
  for (const auto& v : arr) bits.push_back(v.get<int>() ? 1 : 0);
  return SkillVector(bits);
}

inline const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string("missing key: ") + key);
  return j.at(key);
}

}  // namespace iodetail

inline Json super_to_json(const SuperInstance& super) {
  Json j;
  j["meta"] = {{"seed", super.seed},
               {"version", kSchemaVersion},
               {"tau_max", super.tau_max},
               {"speed", super.speed_kmh},
               {"metric", "rectilinear"},
               {"d", super.d},
               {"skill_count", super.skill_count},
               {"delta", super.delta},
               {"delta_e", super.delta_e},
               {"delta_e_tw", super.delta_e_tw},
               {"n_sync", super.n_sync}};
  j["depot"] = {{"x", super.depot.x}, {"y", super.depot.y}};
  j["crews"] = Json::array();
  for (const auto& c : super.crews)
    j["crews"].push_back({{"id", c.id}, {"skills", iodetail::skills_to_json(c.skills)}});
  j["tasks"] = Json::array();
  for (const auto& t : super.tasks)
    j["tasks"].push_back({{"id", t.id},
                          {"a", t.arrival},
                          {"e", t.earliest},
                          {"l", t.latest},
                          {"p", t.process},
                          {"w", t.priority},
                          {"x", t.location.x},
                          {"y", t.location.y},
                          {"skills", iodetail::skills_to_json(t.skills)}});
  return j;
}

inline SuperInstance super_from_json(const Json& j) {
  using iodetail::require;
  SuperInstance super;
  const Json& meta = require(j, "meta");
  super.seed = require(meta, "seed").get<std::uint64_t>();
  super.tau_max = require(meta, "tau_max").get<double>();
  super.speed_kmh = require(meta, "speed").get<double>();
  if (require(meta, "metric").get<std::string>() != "rectilinear")
    throw std::runtime_error("unsupported metric");
  super.d = meta.value("d", 1);
  super.skill_count = meta.value("skill_count", 5);
  const Json& depot = require(j, "depot");
  super.depot = {require(depot, "x").get<double>(), require(depot, "y").get<double>()};
  for (const auto& c : require(j, "crews")) {
    Crew crew;
    crew.id = require(c, "id").get<int>();
    crew.skills = iodetail::skills_from_json(require(c, "skills"));
    super.crews.push_back(std::move(crew));
  }
  for (const auto& t : require(j, "tasks")) {
    Task task;
    task.id = require(t, "id").get<int>();
    task.arrival = require(t, "a").get<double>();
    task.earliest = require(t, "e").get<double>();
    task.latest = require(t, "l").get<double>();
    task.process = require(t, "p").get<double>();
    task.priority = require(t, "w").get<double>();
    task.location = {require(t, "x").get<double>(), require(t, "y").get<double>()};
    task.skills = iodetail::skills_from_json(require(t, "skills"));
    super.tasks.push_back(std::move(task));
  }
  super.n = static_cast<int>(super.tasks.size());
  super.k = static_cast<int>(super.crews.size());

  DynamismMetrics m = dynamism_metrics(super);
  super.delta = m.delta;
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

inline Json solution_to_json(const ReoptProblem& problem, const Solution& solution) {
  (void)problem;
  Json j;
  j["meta"] = {{"version", kSchemaVersion}};
  j["feasible"] = solution.feasible();
  j["twtt"] = solution.feasible() ? Json(solution.twtt) : Json(nullptr);
  j["outsourced"] = solution.outsourced;
  j["routes"] = Json::array();
  for (const auto& r : solution.routes)
    j["routes"].push_back({{"crew", r.crew_id}, {"tasks", r.task_ids}});
  if (solution.schedule.has_value()) {
    Json tasks = Json::array();
    for (const auto& [tid, start] : solution.schedule->start)
      tasks.push_back(
          {{"id", tid}, {"start", start}, {"completion", solution.schedule->completion.at(tid)}});
    Json crews = Json::array();
    for (const auto& [crew_id, visits] : solution.schedule->visits) {
      Json vs = Json::array();
      for (const auto& v : visits)
        vs.push_back({{"task", v.task_id}, {"arrival", v.arrival}, {"idle", v.idle}});
      crews.push_back({{"crew", crew_id},
                       {"visits", vs},
                       {"return_time", solution.schedule->return_time.at(crew_id)}});
    }
    j["schedule"] = {{"tasks", tasks}, {"crews", crews}};
  } else {
    j["schedule"] = nullptr;
  }
  if (!solution.issues.empty()) {
    Json issues = Json::array();
    for (const auto& issue : solution.issues) issues.push_back(issue.message);
    j["issues"] = issues;
  }
  return j;
}

inline Solution solution_from_json(const ReoptProblem& problem, const Json& j) {
  using iodetail::require;
  std::vector<Route> routes;
  for (const auto& r : require(j, "routes"))
    routes.push_back({require(r, "crew").get<int>(), require(r, "tasks").get<std::vector<int>>()});
  std::set<int> outsourced;
  for (const auto& t : require(j, "outsourced")) outsourced.insert(t.get<int>());
  return make_solution(problem, std::move(routes), std::move(outsourced));
}

// `with_timings` keeps measured CPU out of the bytes when reproducibility of
// the output files matters more than the timing columns.
inline Json day_report_to_json(const DayReport& report, bool with_timings) {
  Json j;
  j["meta"] = {{"version", kSchemaVersion}};
  j["total_twtt"] = report.total_twtt;
  j["reopt_count"] = report.reopt_count;
  j["outsourced_count"] = report.outsourced_count;
  j["solver_cpu_s"] = with_timings ? Json(report.solver_cpu_s) : Json(0.0);
  j["epochs"] = Json::array();
  for (const auto& e : report.epochs) {
    j["epochs"].push_back({{"index", e.index},
                           {"tau", e.tau},
                           {"frozen", e.frozen},
                           {"new", e.new_ids},
                           {"free", e.free_ids},
                           {"epoch_twtt", e.solution.feasible() ? Json(e.solution.twtt) : Json(nullptr)},
                           {"outsourced", e.solution.outsourced},
                           {"runtime_s", with_timings ? Json(e.runtime_s) : Json(0.0)}});
  }
  j["outcomes"] = Json::array();
  for (const auto& [tid, outcome] : report.outcomes)
    j["outcomes"].push_back({{"task", tid},
                             {"completion", outcome.completion},
                             {"outsourced", outcome.outsourced},
                             {"epoch", outcome.epoch}});
  return j;
}

// One epoch per line, for streaming inspection of a simulated day.
inline std::string day_trace_jsonl(const DayReport& report, bool with_timings) {
  std::string out;
  for (const auto& e : report.epochs) {
    Json j{{"index", e.index},
           {"tau", e.tau},
           {"free", e.free_ids},
           {"frozen", e.frozen},
           {"new", e.new_ids},
           {"epoch_twtt", e.solution.feasible() ? Json(e.solution.twtt) : Json(nullptr)},
           {"outsourced", e.solution.outsourced},
           {"runtime_s", with_timings ? Json(e.runtime_s) : Json(0.0)}};
    out += j.dump();
    out += "\n";
  }
  return out;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  Json j;
  in >> j;
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

}  // namespace dwsrp
