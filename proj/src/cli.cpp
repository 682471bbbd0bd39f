#include "tap/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tap/ground.hpp"
#include "tap/mutex.hpp"
#include "tap/parser.hpp"
#include "tap/plan.hpp"
#include "tap/reach.hpp"
#include "tap/search.hpp"

namespace tap {

namespace {

struct RunOptions {
  std::string domain_path, problem_path;
  std::string mode = "speed";  // speed | quality | n-solutions
  int solutions = 2;           // for n-solutions mode
  std::uint64_t seed = 2003;
  double cpu = 60.0;
  std::string out_dir = ".";
  double noise = 0.1;
  int max_steps = 500;
  int max_restarts = 30;
  double removal_fraction = 0.05;
  std::string trace_csv;
  int verbosity = 0;
  bool analyze = false;
};

std::string describe(const InputError& e, const std::string& path) {
  std::ostringstream os;
  os << path;
  if (e.line > 0) {
    os << ':' << e.line;
    if (e.col > 0) os << ':' << e.col;
  }
  os << ": error: " << e.what();
  return os.str();
}

// Mutex and reachability dump used by the oracle tests: deterministic
// canonical examination order, CSV rows per fact.
void write_analysis(GroundTask& task, std::ostream& out) {
  MutexTables tables = analyze_task(task);
  out << "facts " << task.fact_count() << "\n";
  out << "actions " << task.action_count() << "\n";
  out << "mutex_fact_pairs " << tables.facts.pair_count() << "\n";
  for (int p = 0; p < task.fact_count(); ++p)
    for (int q = p + 1; q < task.fact_count(); ++q)
      if (tables.facts.mutex(p, q))
        out << "fact_mutex " << task.fact_names[p] << " | "
            << task.fact_names[q] << "\n";
  out << "mutex_action_pairs " << tables.actions.pair_count() << "\n";
  for (int a = 0; a < task.action_count(); ++a)
    for (int b = a + 1; b < task.action_count(); ++b)
      if (tables.actions.mutex(a, b))
        out << "action_mutex (" << task.actions[a].name << ") | ("
            << task.actions[b].name << ")\n";

  ReachabilityTable table = compute_reachability(
      task, task.init, task.init_values, canonical_order(task));
  out << "reachability fact,num_acts,time_fact,best_action\n";
  for (int f = 0; f < task.fact_count(); ++f) {
    out << task.fact_names[f] << ',' << table.num_acts[f] << ',';
    if (table.reachable(f))
      out << format_time(table.time_fact[f]);
    else
      out << "inf";
    out << ',';
    ActionId b = table.best[f];
    if (b >= 0)
      out << '(' << task.actions[b].name << ')';
    else if (b == kStartAction)
      out << "<init>";
    else
      out << "<none>";
    out << "\n";
  }
}

int run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  GroundTask task;
  try {
    Domain domain = parse_domain_file(opt.domain_path);
    Problem problem = parse_problem_file(opt.problem_path, domain);
    task = ground(domain, problem);
  } catch (const InputError& e) {
    err << describe(e, e.line > 0 ? opt.domain_path : opt.problem_path)
        << "\n";
    return 2;
  }
  for (const std::string& w : task.warnings) err << "warning: " << w << "\n";

  if (opt.analyze) {
    write_analysis(task, out);
    return 0;
  }

  MutexTables tables = analyze_task(task);
  Rng order_rng(opt.seed);
  ReachabilityTable base = compute_reachability(
      task, task.init, task.init_values, shuffled_order(task, order_rng));
  for (FactId g : task.goals)
    if (!base.reachable(g)) {
      err << "goal unreachable: " << task.fact_names[g] << "\n";
      return 1;
    }

  SearchConfig cfg;
  cfg.max_steps = opt.max_steps;
  cfg.max_restarts = opt.max_restarts;
  cfg.noise = opt.noise;
  cfg.seed = opt.seed;
  cfg.cpu_budget = opt.cpu;
  cfg.removal_fraction = opt.removal_fraction;
  cfg.record_trace = !opt.trace_csv.empty();
  cfg.verbosity = opt.verbosity;
  if (opt.mode == "speed") {
    cfg.mode = SearchConfig::Mode::first_solution;
  } else {
    cfg.mode = SearchConfig::Mode::anytime;
    cfg.stop_after_solutions = opt.mode == "n-solutions" ? opt.solutions : 0;
  }

  SearchEngine engine(task, tables, base, cfg);
  const SearchOutcome& res = engine.run();

  if (!opt.trace_csv.empty()) {
    std::ofstream tf(opt.trace_csv);
    if (!tf) {
      err << "cannot write " << opt.trace_csv << "\n";
      return 2;
    }
    write_trace_csv(tf, res.trace);
  }
  if (res.records.empty()) {
    err << "no plan found (steps " << res.steps << ", restarts "
        << res.restarts << ")\n";
    return 1;
  }

  std::filesystem::create_directories(opt.out_dir);
  const TAGraph& final_graph = engine.graph();
  int written = 0;
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const SolutionRecord& rec = res.records[i];
    PlanSolution plan;
    for (const ScheduledStep& s : rec.steps)
      plan.steps.push_back({s.action, s.start, s.duration, 0});
    plan.makespan = rec.makespan;
    plan.metric = rec.metric;
    ValidationReport check = validate(task, tables, plan);
    if (!check.valid) {
      err << "internal error: emitted plan " << i + 1
          << " failed validation: " << check.violation << "\n";
      continue;
    }
    std::string path =
        (std::filesystem::path(opt.out_dir) /
         ("plan." + std::to_string(i + 1)))
            .string();
    std::ofstream pf(path);
    if (!pf) {
      err << "cannot write " << path << "\n";
      return 2;
    }
    emit_plan(pf, task, plan, opt.seed);
    out << path << ": metric " << format_time(rec.metric) << ", makespan "
        << format_time(rec.makespan) << ", " << plan.steps.size()
        << " actions\n";
    ++written;
  }
  {
    std::string path =
        (std::filesystem::path(opt.out_dir) / "stats.csv").string();
    std::ofstream sf(path);
    if (sf) emit_stats(sf, res.records);
  }
  (void)final_graph;
  return written > 0 ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  RunOptions opt;
  CLI::App app{"Anytime temporal planner for a PDDL2.1 subset"};
  app.add_option("-o,--domain", opt.domain_path, "Domain file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-f,--problem", opt.problem_path, "Problem file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--mode", opt.mode, "speed | quality | n-solutions")
      ->check(CLI::IsMember({"speed", "quality", "n-solutions"}));
  app.add_option("--solutions", opt.solutions,
                 "Solution count for n-solutions mode")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "Random seed");
  app.add_option("--cpu", opt.cpu, "Wall-clock budget in seconds")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out_dir, "Output directory for plan files");
  app.add_option("--noise", opt.noise, "Initial noise probability")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--max-steps", opt.max_steps, "Steps per restart")
      ->check(CLI::PositiveNumber);
  app.add_option("--restarts", opt.max_restarts, "Maximum restarts")
      ->check(CLI::PositiveNumber);
  app.add_option("--removal-fraction", opt.removal_fraction,
                 "Fraction of the plan perturbed between solutions")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--trace-csv", opt.trace_csv, "Write the per-step trace");
  app.add_flag("-v,--verbose", opt.verbosity, "Progress lines on stderr");
  CLI::App* an = app.add_subcommand(
      "analyze", "Print mutex pairs and the reachability table");
  an->fallthrough();  // so `analyze -o ... -f ...` reaches the main options
  an->callback([&] { opt.analyze = true; });

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run(opt, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tap
