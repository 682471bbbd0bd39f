#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "tap/cli.hpp"
#include "tap/mutex.hpp"
#include "tap/plan.hpp"

using namespace tap;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = 0;
  std::string out, err;
};

CliRun cli(std::vector<std::string> argv) {
  std::ostringstream out, err;
  CliRun r;
  r.status = run_cli(argv, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("taplan-test-" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string dom(const std::string& name) { return fix::data_path(name); }

}  // namespace

TEST_CASE("help prints usage and succeeds") {
  CliRun r = cli({"--help"});
  CHECK(r.status == 0);
  CHECK(r.out.find("--domain") != std::string::npos);
  CHECK(r.out.find("--problem") != std::string::npos);
  CHECK(r.out.find("analyze") != std::string::npos);
}

TEST_CASE("missing arguments and files are usage errors") {
  CHECK(cli({}).status == 2);
  CliRun r = cli({"-o", "/definitely/not/here.pddl", "-f",
                  dom("minilog-p1.pddl")});
  CHECK(r.status == 2);
  CHECK(!r.err.empty());
}

TEST_CASE("pddl errors report file and line with status 2") {
  fs::path d = fresh_dir("badpddl");
  spit(d / "bad.pddl", "(define (domain broken)\n  (:predicates (p)\n");
  CliRun r = cli({"-o", (d / "bad.pddl").string(), "-f",
                  dom("minilog-p1.pddl")});
  CHECK(r.status == 2);
  CHECK(r.err.find("bad.pddl") != std::string::npos);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("unreachable goals exit with status 1") {
  fs::path d = fresh_dir("unreach");
  spit(d / "toy.pddl",
       "(define (domain toy)\n"
       "  (:requirements :strips)\n"
       "  (:predicates (a) (b) (c))\n"
       "  (:action step :parameters ()\n"
       "    :precondition (and (a)) :effect (and (b))))\n");
  spit(d / "toy-p.pddl",
       "(define (problem toy-p) (:domain toy)\n"
       "  (:init (a))\n"
       "  (:goal (and (c))))\n");
  CliRun r = cli({"-o", (d / "toy.pddl").string(), "-f",
                  (d / "toy-p.pddl").string(), "--out", (d / "o").string()});
  CHECK(r.status == 1);
  CHECK(r.err.find("goal unreachable") != std::string::npos);
}

TEST_CASE("a solved task writes plan files that validate") {
  fs::path d = fresh_dir("solve");
  CliRun r = cli({"-o", dom("minilog.pddl"), "-f", dom("minilog-p1.pddl"),
                  "--out", (d / "nested" / "runs").string(), "--seed", "9"});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("plan.1") != std::string::npos);
  CHECK(r.out.find("metric") != std::string::npos);

  fs::path plan_file = d / "nested" / "runs" / "plan.1";
  REQUIRE(fs::exists(plan_file));
  GroundTask task = fix::load("minilog.pddl", "minilog-p1.pddl");
  MutexTables tables = analyze_task(task);
  PlanSolution plan = parse_plan(slurp(plan_file), task);
  ValidationReport rep = validate(task, tables, plan);
  CHECK(rep.valid);
  CHECK(rep.goals_ok);

  fs::path stats = d / "nested" / "runs" / "stats.csv";
  REQUIRE(fs::exists(stats));
  CHECK(slurp(stats).rfind("solution_index,wall_ms,steps,restarts,"
                           "metric,makespan\n", 0) == 0);
}

TEST_CASE("equal seeds give byte-identical plans and traces") {
  fs::path d = fresh_dir("determ");
  std::vector<std::string> common = {"-o", dom("minilog.pddl"),
                                     "-f", dom("minilog-p1.pddl"),
                                     "--seed", "123"};
  auto with = [&](const std::string& sub, const std::string& trace) {
    std::vector<std::string> argv = common;
    argv.insert(argv.end(), {"--out", (d / sub).string(), "--trace-csv",
                             (d / trace).string()});
    return cli(argv);
  };
  CliRun r1 = with("a", "a.csv");
  CliRun r2 = with("b", "b.csv");
  REQUIRE(r1.status == 0);
  REQUIRE(r2.status == 0);
  CHECK(slurp(d / "a" / "plan.1") == slurp(d / "b" / "plan.1"));
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "a.csv").rfind("step,restart,sigma_level", 0) == 0);

  std::vector<std::string> other = {"-o", dom("minilog.pddl"),
                                    "-f", dom("minilog-p1.pddl"),
                                    "--seed", "124", "--out",
                                    (d / "c").string()};
  REQUIRE(cli(other).status == 0);
  // Same task, same format: the plan header differs only in the seed line.
  std::string a = slurp(d / "a" / "plan.1"), c = slurp(d / "c" / "plan.1");
  CHECK(a.find("; seed 123\n") != std::string::npos);
  CHECK(c.find("; seed 124\n") != std::string::npos);
}

TEST_CASE("n-solutions mode stops after the requested count") {
  fs::path d = fresh_dir("nsol");
  CliRun r = cli({"-o", dom("minipair.pddl"), "-f", dom("minipair-p1.pddl"),
                  "--mode", "n-solutions", "--solutions", "1", "--out",
                  d.string()});
  REQUIRE(r.status == 0);
  CHECK(fs::exists(d / "plan.1"));
  CHECK(!fs::exists(d / "plan.2"));
}

TEST_CASE("grounding warnings are forwarded to stderr") {
  fs::path d = fresh_dir("warn");
  spit(d / "wd.pddl",
       "(define (domain wd)\n"
       "  (:requirements :strips :fluents)\n"
       "  (:predicates (a) (b))\n"
       "  (:functions (v))\n"
       "  (:action go :parameters ()\n"
       "    :precondition (and (a) (>= (v) 0)) :effect (and (b))))\n");
  spit(d / "wp.pddl",
       "(define (problem wp) (:domain wd)\n"
       "  (:init (a))\n"
       "  (:goal (and (b))))\n");
  CliRun r = cli({"-o", (d / "wd.pddl").string(), "-f",
                  (d / "wp.pddl").string(), "--out", (d / "o").string()});
  CHECK(r.status == 0);
  CHECK(r.err.find("warning:") != std::string::npos);
  CHECK(r.err.find("(v)") != std::string::npos);
}

TEST_CASE("the analyze subcommand dumps mutexes and reachability") {
  CliRun r = cli({"analyze", "-o", dom("minilog.pddl"), "-f",
                  dom("minilog-p0.pddl")});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("facts ") != std::string::npos);
  CHECK(r.out.find("mutex_fact_pairs ") != std::string::npos);
  CHECK(r.out.find("fact_mutex ") != std::string::npos);  // truck positions
  CHECK(r.out.find("mutex_action_pairs ") != std::string::npos);
  CHECK(r.out.find("reachability fact,num_acts,time_fact,best_action") !=
        std::string::npos);
  CHECK(r.out.find("<init>") != std::string::npos);
}

TEST_CASE("flag validation rejects out-of-range values") {
  CHECK(cli({"-o", dom("minilog.pddl"), "-f", dom("minilog-p0.pddl"),
             "--noise", "1.5"})
            .status == 2);
  CHECK(cli({"-o", dom("minilog.pddl"), "-f", dom("minilog-p0.pddl"),
             "--mode", "bogus"})
            .status == 2);
  CHECK(cli({"-o", dom("minilog.pddl"), "-f", dom("minilog-p0.pddl"),
             "--cpu", "-3"})
            .status == 2);
}
