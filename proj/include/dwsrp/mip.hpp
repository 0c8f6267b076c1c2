#pragma once

#include <iomanip>
#include <sstream>

#include "dwsrp/core.hpp"

namespace dwsrp {

enum class MipFormat { LP, MPS };

struct MipVariable {
  std::string name;
  enum Kind { Binary, Continuous } kind = Continuous;
  double lower = 0.0;
  double upper = kInfinity;
};

struct MipTerm {
  double coef{};
  std::string var;
};

struct MipConstraint {
  std::string name;
  std::string eq_tag;  // constraint family, e.g. "Eq(8)"
  std::vector<MipTerm> terms;
  char sense{};  // '<', '>', '='
  double rhs{};
};

// The Eq.(2)-(18) model of one reoptimization problem, ready for text
// emission. Variable and constraint order is deterministic, so identical
// problems yield byte-identical documents.
struct MipDocument {
  std::string name = "dwsrp";
  std::vector<MipTerm> objective;  // minimize; the -sum(w a) constant lives in the offset
  double objective_offset = 0.0;
  std::vector<MipVariable> variables;
  std::vector<MipConstraint> constraints;

  const MipVariable* find_variable(const std::string& n) const {
    for (const auto& v : variables)
      if (v.name == n) return &v;
    return nullptr;
  }

  std::string to_lp() const;
  std::string to_mps() const;
};

namespace mipdetail {

inline std::string node_name(int task_id) { return std::to_string(task_id); }
inline std::string phi_name(int crew_id) { return "phi" + std::to_string(crew_id); }

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline void append_term(std::string& line, const MipTerm& t, bool first) {
  if (first) {
    if (t.coef < 0) line += "- ";
  } else {
    line += t.coef < 0 ? " - " : " + ";
  }
  double mag = std::abs(t.coef);
  if (mag != 1.0) {
    line += fmt(mag);
    line += " ";
  }
  line += t.var;
}

}  // namespace mipdetail

inline std::string MipDocument::to_lp() const {
  std::ostringstream os;
  os << "\\ " << name << "\n";
  os << "\\ Eq(1) minimize sum w_i C_i; throughput constant offset " << mipdetail::fmt(objective_offset)
     << " omitted\n";
  os << "Minimize\n obj:";
  {
    std::string line;
    bool first = true;
    for (const auto& t : objective) {
      mipdetail::append_term(line, t, first);
      first = false;
      if (line.size() > 200) {
        os << " " << line << "\n    ";
        line.clear();
      }
    }
    if (!line.empty()) os << " " << line;
    os << "\n";
  }
  os << "Subject To\n";
  std::string last_tag;
  for (const auto& c : constraints) {
    if (c.eq_tag != last_tag) {
      os << " \\ " << c.eq_tag << "\n";
      last_tag = c.eq_tag;
    }
    std::string line;
    bool first = true;
    for (const auto& t : c.terms) {
      mipdetail::append_term(line, t, first);
      first = false;
    }
    const char* sense = c.sense == '<' ? "<=" : c.sense == '>' ? ">=" : "=";
    os << " " << c.name << ": " << line << " " << sense << " " << mipdetail::fmt(c.rhs) << "\n";
  }
  os << "Bounds\n";
  os << " \\ Eq(14)-Eq(18) variable domains\n";
  for (const auto& v : variables) {
    if (v.kind == MipVariable::Binary) continue;
    if (v.upper == kInfinity) {
      if (v.lower != 0.0) os << " " << v.name << " >= " << mipdetail::fmt(v.lower) << "\n";
    } else {
      os << " " << mipdetail::fmt(v.lower) << " <= " << v.name << " <= " << mipdetail::fmt(v.upper)
         << "\n";
    }
  }
  os << "Binaries\n";
  {
    std::string line;
    for (const auto& v : variables) {
      if (v.kind != MipVariable::Binary) continue;
      if (line.size() + v.name.size() > 78) {
        os << " " << line << "\n";
        line.clear();
      }
      if (!line.empty()) line += " ";
      line += v.name;
    }
    if (!line.empty()) os << " " << line << "\n";
  }
  os << "End\n";
  return os.str();
}

inline std::string MipDocument::to_mps() const {
  std::ostringstream os;
  auto field = [](const std::string& s, std::size_t width) {
    std::string out = s;
    if (out.size() < width) out.append(width - out.size(), ' ');
    return out;
  };
  os << "NAME          " << name << "\n";
  os << "ROWS\n";
  os << " N  COST\n";
  for (const auto& c : constraints) {
    char s = c.sense == '<' ? 'L' : c.sense == '>' ? 'G' : 'E';
    os << " " << s << "  " << c.name << "\n";
  }
  // column-major coefficients, variables in registry order
  std::map<std::string, std::vector<std::pair<std::string, double>>> columns;
  for (const auto& t : objective) columns[t.var].push_back({"COST", t.coef});
  for (const auto& c : constraints)
    for (const auto& t : c.terms) columns[t.var].push_back({c.name, t.coef});

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (const auto& v : variables) {
    bool want_int = v.kind == MipVariable::Binary;
    if (want_int != in_int) {
      os << "    " << field("MARKER" + std::to_string(marker++), 10) << field("'MARKER'", 25)
         << (want_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = want_int;
    }
    auto it = columns.find(v.name);
    if (it == columns.end()) continue;
    for (const auto& [row, coef] : it->second)
      os << "    " << field(v.name, 10) << field(row, 10) << mipdetail::fmt(coef) << "\n";
  }
  if (in_int)
    os << "    " << field("MARKER" + std::to_string(marker++), 10) << field("'MARKER'", 25)
       << "'INTEND'\n";
  os << "RHS\n";
  for (const auto& c : constraints)
    if (c.rhs != 0.0) os << "    " << field("RHS", 10) << field(c.name, 10) << mipdetail::fmt(c.rhs) << "\n";
  os << "BOUNDS\n";
  for (const auto& v : variables) {
    if (v.kind == MipVariable::Binary) {
      os << " BV " << field("BND", 10) << v.name << "\n";
    } else {
      if (v.lower != 0.0)
        os << " LO " << field("BND", 10) << field(v.name, 10) << mipdetail::fmt(v.lower) << "\n";
      if (v.upper != kInfinity)
        os << " UP " << field("BND", 10) << field(v.name, 10) << mipdetail::fmt(v.upper) << "\n";
    }
  }
  os << "ENDATA\n";
  return os.str();
}

// Builds the exact Eq.(2)-(18) model. Arcs are per crew: from the crew's own
// start node or any task, into any task or the depot. Departure-from-depot
// variables D_0_k are bounded by tau_max, which encodes the return-by-day-end
// rule; big-M is tau_max throughout, as printed.
inline MipDocument build_model(const ReoptProblem& problem) {
  problem.validate();
  using mipdetail::node_name;
  using mipdetail::phi_name;

  MipDocument doc;
  const double tau_max = problem.horizon_end;

  std::vector<int> task_ids;
  for (const auto& t : problem.tasks) {
    if (t.id < 1) throw std::invalid_argument("mip export requires task ids >= 1");
    task_ids.push_back(t.id);
  }
  std::sort(task_ids.begin(), task_ids.end());
  std::vector<int> crew_ids;
  for (const auto& c : problem.crews) crew_ids.push_back(c.id);
  std::sort(crew_ids.begin(), crew_ids.end());

  auto location_of = [&](int crew_id, const std::string& node) -> Point {
    if (node == "0") return problem.depot;
    if (node == phi_name(crew_id)) return problem.state(crew_id).start_location;
    return problem.task(std::stoi(node)).location;
  };
  auto arcs_of = [&](int crew_id) {
    std::vector<std::pair<std::string, std::string>> arcs;
    std::vector<std::string> sources{phi_name(crew_id)};
    for (int t : task_ids) sources.push_back(node_name(t));
    std::vector<std::string> dests;
    for (int t : task_ids) dests.push_back(node_name(t));
    dests.push_back("0");
    for (const auto& i : sources)
      for (const auto& j : dests)
        if (i != j) arcs.push_back({i, j});
    return arcs;
  };

  // variable registry, deterministic order: X, Y, O, D, C
  for (int k : crew_ids)
    for (const auto& [i, j] : arcs_of(k))
      doc.variables.push_back({"X_" + i + "_" + j + "_" + std::to_string(k), MipVariable::Binary, 0, 1});
  for (int k : crew_ids) {
    doc.variables.push_back({"Y_" + phi_name(k) + "_" + std::to_string(k), MipVariable::Binary, 0, 1});
    for (int t : task_ids)
      doc.variables.push_back({"Y_" + node_name(t) + "_" + std::to_string(k), MipVariable::Binary, 0, 1});
  }
  for (int t : task_ids) doc.variables.push_back({"O_" + node_name(t), MipVariable::Binary, 0, 1});
  for (int k : crew_ids) {
    doc.variables.push_back({"D_" + phi_name(k) + "_" + std::to_string(k), MipVariable::Continuous, 0, kInfinity});
    for (int t : task_ids)
      doc.variables.push_back({"D_" + node_name(t) + "_" + std::to_string(k), MipVariable::Continuous, 0, kInfinity});
    doc.variables.push_back({"D_0_" + std::to_string(k), MipVariable::Continuous, 0, tau_max});
  }
  for (int t : task_ids) doc.variables.push_back({"C_" + node_name(t), MipVariable::Continuous, 0, kInfinity});

  for (const auto& t : problem.tasks) {
    doc.objective.push_back({t.priority, "C_" + node_name(t.id)});
    doc.objective_offset -= t.priority * t.arrival;
  }

  auto Y = [](const std::string& node, int k) { return "Y_" + node + "_" + std::to_string(k); };
  auto X = [](const std::string& i, const std::string& j, int k) {
    return "X_" + i + "_" + j + "_" + std::to_string(k);
  };
  auto D = [](const std::string& node, int k) { return "D_" + node + "_" + std::to_string(k); };

  // Eq(2): every task assigned or outsourced
  for (int t : task_ids) {
    MipConstraint c{"eq2_" + node_name(t), "Eq(2) assign or outsource", {}, '>', 1};
    c.terms.push_back({1, "O_" + node_name(t)});
    for (int k : crew_ids) c.terms.push_back({1, Y(node_name(t), k)});
    doc.constraints.push_back(std::move(c));
  }
  // Eq(3): outsourced tasks get no crew
  const double K = static_cast<double>(crew_ids.size());
  for (int t : task_ids) {
    MipConstraint c{"eq3_" + node_name(t), "Eq(3) outsourced tasks get no crew", {}, '<', K};
    for (int k : crew_ids) c.terms.push_back({1, Y(node_name(t), k)});
    c.terms.push_back({K, "O_" + node_name(t)});
    doc.constraints.push_back(std::move(c));
  }
  // Eq(4): crews start from their frozen location at their ready time
  for (int k : crew_ids) {
    doc.constraints.push_back(
        {"eq4a_" + std::to_string(k), "Eq(4) crew start location and time", {{1, Y(phi_name(k), k)}}, '=', 1});
    doc.constraints.push_back({"eq4b_" + std::to_string(k),
                               "Eq(4) crew start location and time",
                               {{1, D(phi_name(k), k)}},
                               '=',
                               problem.state(k).ready_time});
  }
  // Eq(5): every crew ends at the depot
  for (int k : crew_ids) {
    MipConstraint c{"eq5_" + std::to_string(k), "Eq(5) finish at the depot", {}, '=', 1};
    c.terms.push_back({1, X(phi_name(k), "0", k)});
    for (int t : task_ids) c.terms.push_back({1, X(node_name(t), "0", k)});
    doc.constraints.push_back(std::move(c));
  }
  // Eq(6): leave each assigned node exactly once
  for (int k : crew_ids) {
    std::vector<std::string> nodes{phi_name(k)};
    for (int t : task_ids) nodes.push_back(node_name(t));
    for (const auto& i : nodes) {
      MipConstraint c{"eq6_" + i + "_" + std::to_string(k), "Eq(6) outflow matches assignment", {}, '=', 0};
      for (int t : task_ids)
        if (node_name(t) != i) c.terms.push_back({1, X(i, node_name(t), k)});
      c.terms.push_back({1, X(i, "0", k)});
      c.terms.push_back({-1, Y(i, k)});
      doc.constraints.push_back(std::move(c));
    }
  }
  // Eq(7): flow conservation at tasks
  for (int k : crew_ids) {
    for (int t : task_ids) {
      MipConstraint c{"eq7_" + node_name(t) + "_" + std::to_string(k), "Eq(7) flow conservation", {}, '=', 0};
      c.terms.push_back({1, X(phi_name(k), node_name(t), k)});
      for (int s : task_ids)
        if (s != t) c.terms.push_back({1, X(node_name(s), node_name(t), k)});
      for (int s : task_ids)
        if (s != t) c.terms.push_back({-1, X(node_name(t), node_name(s), k)});
      c.terms.push_back({-1, X(node_name(t), "0", k)});
      doc.constraints.push_back(std::move(c));
    }
  }
  // Eq(8): assigned crews jointly cover the skill requirements
  for (int t : task_ids) {
    const Task& task = problem.task(t);
    for (std::size_t q = 0; q < task.skills.size(); ++q) {
      MipConstraint c{"eq8_" + node_name(t) + "_" + std::to_string(q + 1),
                      "Eq(8) skill cover", {}, '>', 0};
      for (int k : crew_ids)
        if (problem.crew(k).skills.has(q)) c.terms.push_back({1, Y(node_name(t), k)});
      c.terms.push_back({task.skills.has(q) ? 1.0 : 0.0, "O_" + node_name(t)});
      c.rhs = task.skills.has(q) ? 1.0 : 0.0;
      doc.constraints.push_back(std::move(c));
    }
  }
  // Eq(9): departure chaining along selected arcs; big-M = tau_max
  for (int k : crew_ids) {
    for (const auto& [i, j] : arcs_of(k)) {
      double p_j = j == "0" ? 0.0 : problem.task(std::stoi(j)).process;
      double c_ij = problem.travel.minutes(location_of(k, i), location_of(k, j));
      MipConstraint c{"eq9_" + i + "_" + j + "_" + std::to_string(k), "Eq(9) departure chaining", {}, '<',
                      tau_max - c_ij - p_j};
      c.terms.push_back({1, D(i, k)});
      c.terms.push_back({-1, D(j, k)});
      c.terms.push_back({tau_max, X(i, j, k)});
      doc.constraints.push_back(std::move(c));
    }
  }
  // Eq(10)/Eq(11): departure equals completion for assigned in-house tasks
  for (int t : task_ids) {
    for (int k : crew_ids) {
      MipConstraint c{"eq10_" + node_name(t) + "_" + std::to_string(k),
                      "Eq(10) departure not before completion", {}, '>', -tau_max};
      c.terms.push_back({1, D(node_name(t), k)});
      c.terms.push_back({-1, "C_" + node_name(t)});
      c.terms.push_back({-tau_max, Y(node_name(t), k)});
      c.terms.push_back({tau_max, "O_" + node_name(t)});
      doc.constraints.push_back(std::move(c));
    }
  }
  for (int t : task_ids)
    for (int k : crew_ids)
      doc.constraints.push_back({"eq11_" + node_name(t) + "_" + std::to_string(k),
                                 "Eq(11) departure not after completion",
                                 {{1, D(node_name(t), k)}, {-1, "C_" + node_name(t)}},
                                 '<',
                                 0});
  // Eq(12)/Eq(13): window on completion; outsourced tasks complete at tau_max
  for (int t : task_ids) {
    const Task& task = problem.task(t);
    doc.constraints.push_back({"eq12_" + node_name(t),
                               "Eq(12) completion upper bound",
                               {{1, "C_" + node_name(t)},
                                {task.latest + task.process - tau_max, "O_" + node_name(t)}},
                               '<',
                               task.latest + task.process});
    doc.constraints.push_back({"eq13_" + node_name(t),
                               "Eq(13) completion lower bound",
                               {{1, "C_" + node_name(t)},
                                {task.earliest + task.process - tau_max, "O_" + node_name(t)}},
                               '>',
                               task.earliest + task.process});
  }
  return doc;
}

inline std::string export_model(const ReoptProblem& problem, MipFormat format) {
  MipDocument doc = build_model(problem);
  return format == MipFormat::LP ? doc.to_lp() : doc.to_mps();
}

struct ImportResult {
  Solution solution;
  double solver_eq1_value = 0.0;        // sum w_i (C_i - a_i) from the file's C values
  std::vector<std::string> mismatches;  // D/C values disagreeing with re-evaluation
};

namespace mipdetail {

// Accepts `name value` lines (# comments allowed) or the common XML solution
// schema (name/value attributes).
inline std::map<std::string, double> parse_solution_values(const std::string& text) {
  std::map<std::string, double> values;
  if (text.find("<") != std::string::npos && text.find("variable") != std::string::npos) {
    std::size_t pos = 0;
    while ((pos = text.find("<variable", pos)) != std::string::npos) {
      std::size_t end = text.find('>', pos);
      if (end == std::string::npos) break;
      std::string tag = text.substr(pos, end - pos);
      auto attr = [&](const std::string& key) -> std::optional<std::string> {
        std::size_t a = tag.find(key + "=\"");
        if (a == std::string::npos) return std::nullopt;
        a += key.size() + 2;
        std::size_t b = tag.find('"', a);
        if (b == std::string::npos) return std::nullopt;
        return tag.substr(a, b - a);
      };
      auto name = attr("name");
      auto value = attr("value");
      if (name && value) values[*name] = std::stod(*value);
      pos = end;
    }
    if (values.empty()) throw std::runtime_error("solution XML contains no variable values");
    return values;
  }
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string name;
    double value;
    if (!(ls >> name)) continue;
    if (name[0] == '#' || name[0] == '\\') continue;
    if (!(ls >> value)) throw std::runtime_error("malformed solution line: " + line);
    values[name] = value;
  }
  return values;
}

}  // namespace mipdetail

// Writes a solution as `name value` lines in export naming (usable as a
// warm start and as a round-trip fixture).
inline std::string solution_to_values(const ReoptProblem& problem, const Solution& solution) {
  using mipdetail::node_name;
  using mipdetail::phi_name;
  if (!solution.schedule.has_value())
    throw std::invalid_argument("solution_to_values: solution has no schedule");
  std::ostringstream os;
  os << "# dwsrp solution values\n";
  os << std::setprecision(15);
  for (const auto& r : solution.routes) {
    std::string prev = phi_name(r.crew_id);
    os << "Y_" << prev << "_" << r.crew_id << " 1\n";
    os << "D_" << prev << "_" << r.crew_id << " " << problem.state(r.crew_id).ready_time << "\n";
    for (int tid : r.task_ids) {
      os << "X_" << prev << "_" << node_name(tid) << "_" << r.crew_id << " 1\n";
      os << "Y_" << node_name(tid) << "_" << r.crew_id << " 1\n";
      os << "D_" << node_name(tid) << "_" << r.crew_id << " "
         << solution.schedule->completion.at(tid) << "\n";
      prev = node_name(tid);
    }
    os << "X_" << prev << "_0_" << r.crew_id << " 1\n";
    os << "D_0_" << r.crew_id << " " << solution.schedule->return_time.at(r.crew_id) << "\n";
  }
  for (int tid : solution.outsourced) {
    os << "O_" << node_name(tid) << " 1\n";
    os << "C_" << node_name(tid) << " " << problem.horizon_end << "\n";
  }
  for (const auto& [tid, completion] : solution.schedule->completion)
    os << "C_" << node_name(tid) << " " << completion << "\n";
  return os.str();
}

// Rebuilds routes from the X arcs, re-evaluates them with the schedule
// propagator and cross-checks the file's timing against the re-evaluation.
// Throws on structural errors and on objective disagreement beyond 1e-4.
inline ImportResult import_solution(const ReoptProblem& problem, const std::string& text) {
  using mipdetail::node_name;
  using mipdetail::phi_name;
  auto values = mipdetail::parse_solution_values(text);
  auto value_of = [&](const std::string& name) {
    auto it = values.find(name);
    return it == values.end() ? 0.0 : it->second;
  };

  ImportResult result;
  std::vector<Route> routes;
  for (const auto& crew : problem.crews) {
    Route route{crew.id, {}};
    // follow the selected arcs from the crew's start node to the depot
    std::map<std::string, std::string> next;
    std::string prefix = "X_";
    for (const auto& [name, v] : values) {
      if (v < 0.5 || name.rfind(prefix, 0) != 0) continue;
      std::size_t last = name.rfind('_');
      if (last == std::string::npos || name.substr(last + 1) != std::to_string(crew.id)) continue;
      std::string body = name.substr(2, last - 2);  // i_j
      // node names never contain '_', so the first one splits i from j
      std::size_t sep = body.find('_');
      std::string i = body.substr(0, sep);
      std::string j = body.substr(sep + 1);
      if (next.count(i))
        throw std::runtime_error("crew " + std::to_string(crew.id) + " leaves node " + i + " twice");
      next[i] = j;
    }
    std::string node = phi_name(crew.id);
    std::set<std::string> seen;
    while (true) {
      auto it = next.find(node);
      if (it == next.end()) {
        if (node == phi_name(crew.id) && next.empty()) break;  // crew unused
        throw std::runtime_error("crew " + std::to_string(crew.id) + " route disconnected at node " + node);
      }
      node = it->second;
      next.erase(it);
      if (node == "0") break;
      if (!seen.insert(node).second)
        throw std::runtime_error("crew " + std::to_string(crew.id) + " revisits node " + node);
      route.task_ids.push_back(std::stoi(node));
    }
    if (!next.empty())
      throw std::runtime_error("crew " + std::to_string(crew.id) + " has arcs disconnected from its path");
    routes.push_back(std::move(route));
  }

  std::set<int> outsourced;
  for (const auto& t : problem.tasks)
    if (value_of("O_" + node_name(t.id)) >= 0.5) outsourced.insert(t.id);

  result.solution = make_solution(problem, std::move(routes), std::move(outsourced));

  for (const auto& t : problem.tasks) {
    double c_solver = value_of("C_" + node_name(t.id));
    result.solver_eq1_value += t.priority * (c_solver - t.arrival);
    if (result.solution.schedule.has_value()) {
      auto it = result.solution.schedule->completion.find(t.id);
      if (it != result.solution.schedule->completion.end() && std::abs(it->second - c_solver) > 1e-4)
        result.mismatches.push_back("C_" + node_name(t.id) + ": solver " + std::to_string(c_solver) +
                                    " vs evaluated " + std::to_string(it->second));
    }
  }
  if (result.solution.schedule.has_value()) {
    for (const auto& r : result.solution.routes) {
      for (int tid : r.task_ids) {
        std::string name = "D_" + node_name(tid) + "_" + std::to_string(r.crew_id);
        if (values.count(name) &&
            std::abs(values[name] - result.solution.schedule->completion.at(tid)) > 1e-4)
          result.mismatches.push_back(name + ": solver departure disagrees with re-evaluation");
      }
    }
  }
  if (result.solution.feasible() && std::abs(result.solver_eq1_value - result.solution.twtt) > 1e-4)
    throw std::runtime_error("objective verification failed: solver Eq(1) value " +
                             std::to_string(result.solver_eq1_value) + " vs re-evaluated " +
                             std::to_string(result.solution.twtt));
  return result;
}

}  // namespace dwsrp
