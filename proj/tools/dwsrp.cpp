// Command-line front end: instance generation, single-period solves, day
// simulation, experiment sweeps and MIP export/import.

#include <atomic>
#include <chrono>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dwsrp/alns.hpp"
#include "dwsrp/construct.hpp"
#include "dwsrp/core.hpp"
#include "dwsrp/dynamics.hpp"
#include "dwsrp/instgen.hpp"
#include "dwsrp/io.hpp"
#include "dwsrp/mip.hpp"

namespace {

using namespace dwsrp;

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

double parse_frozen(const std::string& text, const SuperInstance& super) {
  if (text == "maxtp") return std::max(max_travel_minutes(super), max_process_minutes(super));
  if (text == "sumtp") return max_travel_minutes(super) + max_process_minutes(super);
  std::size_t used = 0;
  double v = std::stod(text, &used);
  if (used != text.size() || v < 0) throw std::runtime_error("bad --frozen value: " + text);
  return v;
}

SolverKind parse_solver(const std::string& text) {
  if (text == "ch") return SolverKind::CH;
  if (text == "alns") return SolverKind::ALNS;
  throw std::runtime_error("bad --solver value: " + text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) parts.push_back(item);
  if (parts.empty()) throw std::runtime_error("empty list: " + text);
  return parts;
}

struct AlnsFlags {
  AlnsParams params;
  void attach(CLI::App* cmd) {
    cmd->add_option("--nu1", params.max_iterations, "max ALNS iterations");
    cmd->add_option("--nu2", params.max_non_improving, "max non-improving iterations");
    cmd->add_option("--t0", params.initial_temperature, "initial temperature");
    cmd->add_option("--alpha", params.cooling, "cooling factor");
    cmd->add_option("--gamma-min", params.gamma_min, "min degree of destruction");
    cmd->add_option("--gamma-max", params.gamma_max, "max degree of destruction");
    cmd->add_option("--regret-n", params.regret_depth, "regret look-ahead depth");
  }
};

struct SolveResult {
  Solution solution;
  double cpu_s{};
};

SolveResult solve_problem(const ReoptProblem& problem, SolverKind solver, AlnsParams params) {
  auto t0 = std::chrono::steady_clock::now();
  Solution sol = construct_initial(problem);
  if (solver == SolverKind::ALNS && !problem.tasks.empty()) sol = run_alns(problem, sol, params);
  double cpu = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(sol), cpu};
}

constexpr const char* kDayCsvHeader =
    "instance,n,k,delta,beta_task,beta_time,frozen,solver,seed,twtt,cpu_s,outsourced,reopts";

std::string day_csv_row(const std::string& instance, const SuperInstance& super,
                        const Strategy& strategy, std::uint64_t seed, const DayReport& report,
                        bool with_timings, const std::string& status = "ok") {
  std::ostringstream os;
  os << instance << "," << super.n << "," << super.k << "," << super.delta << ","
     << strategy.beta_task << "," << strategy.beta_time << "," << strategy.frozen_len << ","
     << (strategy.solver == SolverKind::CH ? "ch" : "alns") << "," << seed << ","
     << report.total_twtt << "," << (with_timings ? report.solver_cpu_s : 0.0) << ","
     << report.outsourced_count << "," << report.reopt_count << "," << status;
  return os.str();
}

int cmd_generate(int n, int k, int d, double delta, bool has_d, bool has_delta, int skills,
                 std::uint64_t seed, bool loose, const std::string& out,
                 const std::string& format) {
  if (!has_d) d = has_delta ? pick_interval_count(n, delta) : pick_interval_count(n, 0.8);
  SuperInstance super = generate_super(n, k, d, seed, skills);
  if (loose) super = loosen(super);
  if (!out.empty()) write_text_file(out, super_to_json(super).dump(2) + "\n");
  if (format == "csv") {
    std::cout << "# dwsrp.instance.v1\nseed,n,k,d,delta,delta_e,delta_e_tw,n_sync\n"
              << seed << "," << super.n << "," << super.k << "," << super.d << "," << super.delta
              << "," << super.delta_e << "," << super.delta_e_tw << "," << super.n_sync << "\n";
  } else {
    Json j{{"seed", seed},          {"n", super.n},
           {"k", super.k},          {"d", super.d},
           {"delta", super.delta},  {"delta_e", super.delta_e},
           {"delta_e_tw", super.delta_e_tw}, {"n_sync", super.n_sync}};
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& instance, const std::string& format) {
  SuperInstance super = super_from_json(load_json_file(instance));
  DynamismMetrics m = dynamism_metrics(super);
  if (format == "csv") {
    std::cout << "# dwsrp.metrics.v1\ndelta,delta_e,delta_e_tw,n_sync\n"
              << m.delta << "," << m.delta_e << "," << m.delta_e_tw << "," << super.n_sync << "\n";
  } else {
    Json j{{"delta", m.delta},
           {"delta_e", m.delta_e},
           {"delta_e_tw", m.delta_e_tw},
           {"n_sync", super.n_sync}};
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int cmd_solve(const std::string& instance, const std::string& solver_name, bool epoch0,
              std::uint64_t seed, AlnsParams params, const std::string& out) {
  SuperInstance super = super_from_json(load_json_file(instance));
  ReoptProblem problem = static_problem(super, !epoch0);
  params.seed = seed;
  SolverKind solver = parse_solver(solver_name);
  SolveResult res = solve_problem(problem, solver, params);

  if (!res.solution.feasible()) {
    auto violations = check_feasibility(problem, res.solution);
    std::ostringstream os;
    for (const auto& v : violations) os << " [" << v.eq << "] " << v.message << ";";
    throw std::runtime_error("solve produced an infeasible plan:" + os.str());
  }
  if (!out.empty()) {
    Json j = solution_to_json(problem, res.solution);
    j["meta"]["seed"] = seed;
    j["meta"]["solver"] = solver_name;
    j["meta"]["instance"] = instance;
    write_text_file(out, j.dump(2) + "\n");
  }
  std::cout << "twtt=" << res.solution.twtt << " cpu_s=" << res.cpu_s
            << " outsourced=" << res.solution.outsourced.size() << "\n";
  return 0;
}

int cmd_simulate(const std::string& instance, int beta_task, double beta_time,
                 const std::string& frozen, const std::string& solver_name, std::uint64_t seed,
                 AlnsParams params, const std::string& out, const std::string& trace,
                 const std::string& format, bool with_timings) {
  SuperInstance super = super_from_json(load_json_file(instance));
  Strategy strategy;
  strategy.beta_task = beta_task;
  strategy.beta_time = beta_time;
  strategy.frozen_len = parse_frozen(frozen, super);
  strategy.solver = parse_solver(solver_name);
  params.seed = seed;

  DayReport report = simulate_day(super, strategy, params);

  if (!out.empty()) {
    Json j = day_report_to_json(report, with_timings);
    j["meta"]["seed"] = seed;
    j["meta"]["instance"] = instance;
    j["meta"]["beta_task"] = strategy.beta_task;
    j["meta"]["beta_time"] = strategy.beta_time;
    j["meta"]["frozen"] = strategy.frozen_len;
    j["meta"]["solver"] = solver_name;
    write_text_file(out, j.dump(2) + "\n");
  }
  if (!trace.empty()) write_text_file(trace, day_trace_jsonl(report, with_timings));
  if (format == "csv") {
    std::cout << "# dwsrp.day.v1\n"
              << kDayCsvHeader << ",status\n"
              << day_csv_row(instance, super, strategy, seed, report, true) << "\n";
  } else {
    Json j{{"twtt", report.total_twtt},
           {"reopts", report.reopt_count},
           {"outsourced", report.outsourced_count},
           {"cpu_s", report.solver_cpu_s},
           {"seed", seed}};
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::vector<std::string>& instances, const std::string& beta_tasks,
              double beta_time, const std::string& frozens, const std::string& solver_name,
              const std::string& seeds_text, AlnsParams base_params, const std::string& out,
              bool with_timings) {
  struct Cell {
    std::string instance;
    int beta_task{};
    std::string frozen;
    std::uint64_t seed{};
  };
  std::vector<Cell> cells;
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(seeds_text)) seeds.push_back(std::stoull(s));
  for (const auto& inst : instances)
    for (const auto& bt : split_list(beta_tasks))
      for (const auto& fr : split_list(frozens))
        for (std::uint64_t sd : seeds) cells.push_back({inst, std::stoi(bt), fr, sd});

  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DWSRP_THREADS")) threads = std::max(1, std::atoi(env));
  threads = std::min(threads, cells.size());

  std::vector<std::string> rows(cells.size());
  struct Stats {
    double twtt{}, cpu{}, outsourced{}, reopts{};
  };
  std::vector<Stats> stats(cells.size());
  std::vector<bool> ok(cells.size(), false);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      const Cell& cell = cells[i];
      try {
        SuperInstance super = super_from_json(load_json_file(cell.instance));
        Strategy strategy;
        strategy.beta_task = cell.beta_task;
        strategy.beta_time = beta_time;
        strategy.frozen_len = parse_frozen(cell.frozen, super);
        strategy.solver = parse_solver(solver_name);
        AlnsParams params = base_params;
        params.seed = cell.seed;
        DayReport report = simulate_day(super, strategy, params);
        rows[i] = day_csv_row(cell.instance, super, strategy, cell.seed, report, with_timings);
        stats[i] = {report.total_twtt, with_timings ? report.solver_cpu_s : 0.0,
                    static_cast<double>(report.outsourced_count),
                    static_cast<double>(report.reopt_count)};
        ok[i] = true;
      } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& ch : msg)
          if (ch == ',' || ch == '\n') ch = ';';
        rows[i] = cell.instance + ",,,," + std::to_string(cell.beta_task) + ",," + cell.frozen +
                  "," + solver_name + "," + std::to_string(cell.seed) + ",,,,," + msg;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream os;
  os << "# dwsrp.sweep.v1\n" << kDayCsvHeader << ",status\n";
  for (const auto& row : rows) os << row << "\n";

  Stats mins{kInfinity, kInfinity, kInfinity, kInfinity}, maxs{}, sums{};
  std::size_t n_ok = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!ok[i]) continue;
    ++n_ok;
    mins = {std::min(mins.twtt, stats[i].twtt), std::min(mins.cpu, stats[i].cpu),
            std::min(mins.outsourced, stats[i].outsourced), std::min(mins.reopts, stats[i].reopts)};
    maxs = {std::max(maxs.twtt, stats[i].twtt), std::max(maxs.cpu, stats[i].cpu),
            std::max(maxs.outsourced, stats[i].outsourced), std::max(maxs.reopts, stats[i].reopts)};
    sums = {sums.twtt + stats[i].twtt, sums.cpu + stats[i].cpu,
            sums.outsourced + stats[i].outsourced, sums.reopts + stats[i].reopts};
  }
  auto footer = [&](const char* label, const Stats& s) {
    os << label << ",,,,,,,,," << s.twtt << "," << s.cpu << "," << s.outsourced << "," << s.reopts
       << ",\n";
  };
  if (n_ok > 0) {
    footer("Min.", mins);
    footer("Max.", maxs);
    footer("Avg.", {sums.twtt / n_ok, sums.cpu / n_ok, sums.outsourced / n_ok, sums.reopts / n_ok});
  }

  if (!out.empty())
    write_text_file(out, os.str());
  else
    std::cout << os.str();
  std::cout << "cells=" << cells.size() << " ok=" << n_ok << "\n";
  return n_ok == cells.size() ? 0 : 3;
}

int cmd_export_mip(const std::string& instance, bool epoch0, const std::string& format,
                   const std::string& out) {
  SuperInstance super = super_from_json(load_json_file(instance));
  ReoptProblem problem = static_problem(super, !epoch0);
  std::string text = export_model(problem, format == "mps" ? MipFormat::MPS : MipFormat::LP);
  if (!out.empty())
    write_text_file(out, text);
  else
    std::cout << text;
  return 0;
}

int cmd_import_solution(const std::string& instance, const std::string& solution_path, bool epoch0,
                        const std::string& out) {
  SuperInstance super = super_from_json(load_json_file(instance));
  ReoptProblem problem = static_problem(super, !epoch0);
  std::ifstream in(solution_path);
  if (!in) throw std::runtime_error("cannot open file: " + solution_path);
  std::stringstream buffer;
  buffer << in.rdbuf();

  ImportResult res = import_solution(problem, buffer.str());
  auto violations = check_feasibility(problem, res.solution);
  if (!out.empty()) {
    Json j = solution_to_json(problem, res.solution);
    j["meta"]["imported_from"] = solution_path;
    j["meta"]["solver_eq1_value"] = res.solver_eq1_value;
    write_text_file(out, j.dump(2) + "\n");
  }
  std::cout << "twtt=" << res.solution.twtt << " violations=" << violations.size()
            << " timing_mismatches=" << res.mismatches.size() << "\n";
  for (const auto& m : res.mismatches) std::cerr << "mismatch: " << m << "\n";
  for (const auto& v : violations) std::cerr << "violation: [" << v.eq << "] " << v.message << "\n";
  return violations.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DWSRP-TW-SC solver and day simulator"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed (generated and printed when absent)")
        ->each([&](const std::string&) { seed_given = true; });
  };

  // generate
  auto* gen = app.add_subcommand("generate", "generate a seeded super-instance");
  int n = 30, k = 2, d = 0, skills = 5;
  double delta = 0.8;
  bool loose = false;
  std::string out, format = "json", instance, solver_name = "alns";
  gen->add_option("--n", n, "task count")->required();
  gen->add_option("--k", k, "crew count")->required();
  auto* d_opt = gen->add_option("--d", d, "interval count");
  auto* delta_opt = gen->add_option("--delta", delta, "target degree of dynamism");
  gen->add_option("--skills", skills, "skill count");
  gen->add_flag("--loose", loose, "relax every deadline to tau_max");
  gen->add_option("--out", out, "instance file to write");
  gen->add_option("--format", format, "stdout format: json|csv");
  add_seed(gen);

  // metrics
  auto* met = app.add_subcommand("metrics", "dynamism metrics of an instance");
  met->add_option("--instance", instance, "instance file")->required();
  met->add_option("--format", format, "stdout format: json|csv");

  // solve
  auto* sol = app.add_subcommand("solve", "solve one static problem");
  bool epoch0 = false;
  AlnsFlags alns_flags;
  sol->add_option("--instance", instance, "instance file")->required();
  sol->add_option("--solver", solver_name, "ch|alns");
  sol->add_flag("--epoch0", epoch0, "solve only the initially known tasks");
  sol->add_option("--out", out, "solution file to write");
  alns_flags.attach(sol);
  add_seed(sol);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a full working day");
  int beta_task = 5;
  double beta_time = 60.0;
  std::string frozen = "30", trace;
  bool with_timings = false;
  sim->add_option("--instance", instance, "super-instance file")->required();
  sim->add_option("--beta-task", beta_task, "task-count trigger");
  sim->add_option("--beta-time", beta_time, "minutes trigger");
  sim->add_option("--frozen", frozen, "frozen period: 0|maxtp|sumtp|<minutes>");
  sim->add_option("--solver", solver_name, "ch|alns");
  sim->add_option("--out", out, "day report JSON");
  sim->add_option("--trace", trace, "per-epoch JSONL trace");
  sim->add_option("--format", format, "stdout format: json|csv");
  sim->add_flag("--timings", with_timings, "write measured CPU into output files");
  alns_flags.attach(sim);
  add_seed(sim);

  // sweep
  auto* swp = app.add_subcommand("sweep", "grid of simulations over instances x strategies x seeds");
  std::vector<std::string> instances;
  std::string beta_tasks = "5", frozens = "30", seeds_text = "1";
  swp->add_option("--instances", instances, "super-instance files")->required()->expected(-1);
  swp->add_option("--beta-task", beta_tasks, "comma list, e.g. 1,3,5");
  swp->add_option("--beta-time", beta_time, "minutes trigger");
  swp->add_option("--frozen", frozens, "comma list: 0,maxtp,sumtp or minutes");
  swp->add_option("--solver", solver_name, "ch|alns");
  swp->add_option("--seeds", seeds_text, "comma list of seeds");
  swp->add_option("--out", out, "CSV file to write");
  swp->add_flag("--timings", with_timings, "write measured CPU into the CSV");
  alns_flags.attach(swp);

  // export-mip
  auto* exp = app.add_subcommand("export-mip", "emit the Eq.(1)-(18) model");
  std::string mip_format = "lp";
  exp->add_option("--instance", instance, "instance file")->required();
  exp->add_flag("--epoch0", epoch0, "model only the initially known tasks");
  exp->add_option("--format", mip_format, "lp|mps");
  exp->add_option("--out", out, "model file to write");

  // import-solution
  auto* imp = app.add_subcommand("import-solution", "verify an external solver solution");
  std::string solution_path;
  imp->add_option("--instance", instance, "instance file")->required();
  imp->add_option("--solution", solution_path, "name/value or XML solution file")->required();
  imp->add_flag("--epoch0", epoch0, "model only the initially known tasks");
  imp->add_option("--out", out, "solution JSON to write");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!seed_given) {
      seed = fresh_seed();
      if (gen->parsed() || sol->parsed() || sim->parsed())
        std::cout << "seed=" << seed << "\n";
    }
    AlnsParams params = alns_flags.params;
    if (gen->parsed())
      return cmd_generate(n, k, d, delta, d_opt->count() > 0, delta_opt->count() > 0, skills, seed,
                          loose, out, format);
    if (met->parsed()) return cmd_metrics(instance, format);
    if (sol->parsed()) return cmd_solve(instance, solver_name, epoch0, seed, params, out);
    if (sim->parsed())
      return cmd_simulate(instance, beta_task, beta_time, frozen, solver_name, seed, params, out,
                          trace, format, with_timings);
    if (swp->parsed())
      return cmd_sweep(instances, beta_tasks, beta_time, frozens, solver_name, seeds_text, params,
                       out, with_timings);
    if (exp->parsed()) return cmd_export_mip(instance, epoch0, mip_format, out);
    if (imp->parsed()) return cmd_import_solution(instance, solution_path, epoch0, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: " << msg << "\n";
    return 2;
  }
  return 1;
}
