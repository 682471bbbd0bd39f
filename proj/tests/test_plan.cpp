#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "tap/plan.hpp"

using namespace tap;
using fix::TaskBuilder;

namespace {

struct Prepared {
  GroundTask task;
  MutexTables mutex;
  ReachabilityTable base;

  explicit Prepared(GroundTask t) : task(std::move(t)) {
    mutex = analyze_task(task);
    base = compute_reachability(task, task.init, task.init_values,
                                canonical_order(task));
  }

  TAGraph graph() const { return TAGraph(task, mutex, base); }
};

// The five-action scheduling fixture solved: a5 spliced in before a4.
struct Solved {
  fix::ScheduleExample ex = fix::make_schedule_example();
  Prepared p;
  TAGraph g;

  Solved() : p(std::move(ex.task)), g(p.graph()) {
    g.init_from_plan({ex.a1, ex.a2, ex.a3, ex.a5, ex.a4});
  }
};

PlanStep step_for(const PlanSolution& plan, ActionId a) {
  for (const PlanStep& s : plan.steps)
    if (s.action == a) return s;
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_CASE("extraction schedules the levels and sorts by start then name") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  REQUIRE(plan.steps.size() == 5);
  std::vector<ActionId> order;
  for (const PlanStep& st : plan.steps) order.push_back(st.action);
  CHECK(order ==
        std::vector<ActionId>{s.ex.a1, s.ex.a2, s.ex.a3, s.ex.a5, s.ex.a4});
  CHECK(plan.steps[0].start == doctest::Approx(0.0));
  CHECK(plan.steps[1].start == doctest::Approx(50.0));
  CHECK(plan.steps[2].start == doctest::Approx(120.0));  // a3 before a5 by name
  CHECK(plan.steps[3].start == doctest::Approx(120.0));
  CHECK(plan.steps[4].start == doctest::Approx(230.0));
  CHECK(plan.steps[4].duration == doctest::Approx(40.0));
  CHECK(plan.steps[4].level == 5);
  CHECK(plan.makespan == doctest::Approx(270.0));
  CHECK(plan.metric == doctest::Approx(5.0));  // step count without a metric
  CHECK(!plan.certificate.empty());

  // The certificate's orderings hold in the extracted schedule.
  for (const OrderingConstraint& c : plan.certificate) {
    PlanStep before, after;
    for (const PlanStep& st : plan.steps) {
      if (st.level == c.before_level) before = st;
      if (st.level == c.after_level) after = st;
    }
    CHECK(before.start + before.duration <= after.start + 1e-9);
  }
}

TEST_CASE("extraction refuses graphs with inconsistencies") {
  Solved s;
  TAGraph g = s.p.graph();
  g.init_from_plan({s.ex.a1, s.ex.a2, s.ex.a3, s.ex.a4});
  CHECK_THROWS_AS(extract_plan(g), std::logic_error);
}

TEST_CASE("a correct schedule validates cleanly") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  ValidationReport rep = validate(s.p.task, s.p.mutex, plan);
  CHECK(rep.valid);
  CHECK(rep.goals_ok);
  CHECK(rep.violation.empty());
  CHECK(rep.metric == doctest::Approx(5.0));
  CHECK(rep.makespan == doctest::Approx(270.0));
}

TEST_CASE("overlapping mutex actions are rejected") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  // Pull a2 back to start 0: it now overlaps the mutex action a1.
  for (PlanStep& st : plan.steps)
    if (st.action == s.ex.a2) st.start = 0.0;
  ValidationReport rep = validate(s.p.task, s.p.mutex, plan);
  CHECK(!rep.valid);
  CHECK(rep.goals_ok);  // the end state is still fine
  CHECK(rep.violation.find("mutex actions overlap") != std::string::npos);
  CHECK(rep.violation_time == doctest::Approx(0.0));
}

TEST_CASE("an exact end-to-start handoff between mutex actions is fine") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  CHECK(step_for(plan, s.ex.a2).start ==
        doctest::Approx(step_for(plan, s.ex.a1).start + 50.0));
  CHECK(validate(s.p.task, s.p.mutex, plan).valid);
}

TEST_CASE("missed goals and unmet preconditions are reported") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  PlanSolution partial = plan;
  partial.steps.clear();
  for (const PlanStep& st : plan.steps)
    if (st.action != s.ex.a4) partial.steps.push_back(st);
  ValidationReport rep = validate(s.p.task, s.p.mutex, partial);
  CHECK(!rep.valid);
  CHECK(!rep.goals_ok);
  CHECK(rep.violation.find("goal f13 unmet") != std::string::npos);

  PlanSolution lone;
  lone.steps.push_back({s.ex.a4, 0.0, 40.0, 0});
  ValidationReport rep2 = validate(s.p.task, s.p.mutex, lone);
  CHECK(!rep2.valid);
  CHECK(rep2.violation.find("precondition") != std::string::npos);
  CHECK(rep2.violation.find("of (a4) unmet") != std::string::npos);
  CHECK(rep2.violation_action == s.ex.a4);
  CHECK(rep2.violation_time == doctest::Approx(0.0));
}

TEST_CASE("start points see the effects of simultaneous end points") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({3});
  ActionId prod = b.act("prod", {1}, {2}, {}, 30);
  ActionId cons = b.raw_act("cons", 10);
  b.action(cons).pre_start.push_back(TaskBuilder::fid(2));
  b.action(cons).add_end.push_back(TaskBuilder::fid(3));
  Prepared p(std::move(b.done()));

  PlanSolution plan;
  plan.steps.push_back({prod, 0.0, 30.0, 0});
  plan.steps.push_back({cons, 30.0, 10.0, 0});
  CHECK(validate(p.task, p.mutex, plan).valid);

  plan.steps[1].start = 29.0;  // too early: the fact is not there yet
  ValidationReport rep = validate(p.task, p.mutex, plan);
  CHECK(!rep.valid);
  CHECK(rep.violation.find("at-start") != std::string::npos);
  CHECK(rep.violation_time == doctest::Approx(29.0));
}

TEST_CASE("at-start effects license overlapping consumers") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({3});
  ActionId prod = b.raw_act("prod", 40);
  b.action(prod).pre_over.push_back(TaskBuilder::fid(1));
  b.action(prod).add_start.push_back(TaskBuilder::fid(2));
  ActionId cons = b.raw_act("cons", 10);
  b.action(cons).pre_over.push_back(TaskBuilder::fid(2));
  b.action(cons).add_end.push_back(TaskBuilder::fid(3));
  Prepared p(std::move(b.done()));

  PlanSolution plan;
  plan.steps.push_back({prod, 0.0, 40.0, 0});
  plan.steps.push_back({cons, 10.0, 10.0, 0});  // wholly inside prod
  ValidationReport rep = validate(p.task, p.mutex, plan);
  CHECK(rep.valid);
  CHECK(rep.makespan == doctest::Approx(40.0));
}

TEST_CASE("plans naming unknown actions raise input errors") {
  Solved s;
  PlanSolution plan;
  plan.steps.push_back({99, 0.0, 1.0, 0});
  CHECK_THROWS_AS(validate(s.p.task, s.p.mutex, plan), InputError);
}

TEST_CASE("metric replay matches the declared combination") {
  GroundTask task = fix::load("minitravel.pddl", "minitravel-p1.pddl");
  ActionId fly = kNoAction;
  for (ActionId a = 0; a < task.action_count(); ++a)
    if (task.actions[a].name == "fly p1 c0 c1") fly = a;
  REQUIRE(fly != kNoAction);

  PlanSolution plan;
  plan.steps.push_back({fly, 0.0, 113.0, 0});
  // 4 * makespan + 5 * fuel burned by the flight.
  CHECK(metric_value(task, plan) == doctest::Approx(4 * 113.0 + 13560.0));

  Solved s;
  PlanSolution counted = extract_plan(s.g);
  CHECK(metric_value(s.p.task, counted) == doctest::Approx(5.0));
}

TEST_CASE("times format with four decimals and normalized zero") {
  CHECK(format_time(0.0) == "0.0000");
  CHECK(format_time(-0.00004) == "0.0000");
  CHECK(format_time(1.23456) == "1.2346");
  CHECK(format_time(-2.5) == "-2.5000");
  CHECK(format_time(270.0) == "270.0000");
}

TEST_CASE("emitted plans carry the header and the step lines") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  std::ostringstream os;
  emit_plan(os, s.p.task, plan, 42);
  std::string text = os.str();
  CHECK(text.find("; seed 42\n") != std::string::npos);
  CHECK(text.find("; metric 5.0000\n") != std::string::npos);
  CHECK(text.find("; makespan 270.0000\n") != std::string::npos);
  CHECK(text.find("0.0000: (a1) [50.0000]\n"
                  "50.0000: (a2) [70.0000]\n"
                  "120.0000: (a3) [100.0000]\n"
                  "120.0000: (a5) [110.0000]\n"
                  "230.0000: (a4) [40.0000]\n") != std::string::npos);
}

TEST_CASE("emitted plans parse back to the same schedule") {
  Solved s;
  PlanSolution plan = extract_plan(s.g);
  std::ostringstream os;
  emit_plan(os, s.p.task, plan, 7);
  PlanSolution back = parse_plan(os.str(), s.p.task);
  REQUIRE(back.steps.size() == plan.steps.size());
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    CHECK(back.steps[i].action == plan.steps[i].action);
    CHECK(back.steps[i].start ==
          doctest::Approx(plan.steps[i].start).epsilon(1e-9));
    CHECK(back.steps[i].duration ==
          doctest::Approx(plan.steps[i].duration).epsilon(1e-9));
  }
  CHECK(back.makespan == doctest::Approx(plan.makespan));
  CHECK(back.metric == doctest::Approx(plan.metric));
  CHECK(validate(s.p.task, s.p.mutex, back).valid);
}

TEST_CASE("plan parsing reports the offending line") {
  Solved s;
  try {
    parse_plan("\n\n0.0: (nope) [1.0]\n", s.p.task);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(e.kind == ErrorKind::undeclared);
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
  try {
    parse_plan("garbage\n", s.p.task);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(e.kind == ErrorKind::syntax);
    CHECK(e.line == 1);
  }
  CHECK_THROWS_AS(parse_plan("0.0 (a1) [1.0]\n", s.p.task), InputError);
  CHECK_THROWS_AS(parse_plan("0.0: (a1) [1.0\n", s.p.task), InputError);
  CHECK_THROWS_AS(parse_plan("0.0: () [1.0]\n", s.p.task), InputError);

  // Comments and case differences are tolerated.
  PlanSolution ok = parse_plan("; header\n0.0: (A1) [50.0] ; tail\n", s.p.task);
  REQUIRE(ok.steps.size() == 1);
  CHECK(ok.steps[0].action == s.ex.a1);
}

TEST_CASE("stats rows summarize the solution stream") {
  SolutionRecord r1;
  r1.metric = 100.0;
  r1.makespan = 6.0;
  r1.found_at = 0.0123;
  r1.steps_used = 42;
  r1.restarts_used = 1;
  SolutionRecord r2;
  r2.metric = 6.0;
  r2.makespan = 6.0;
  r2.found_at = 1.5;
  r2.steps_used = 90;
  r2.restarts_used = 2;
  std::ostringstream os;
  emit_stats(os, {r1, r2});
  CHECK(os.str() ==
        "solution_index,wall_ms,steps,restarts,metric,makespan\n"
        "1,12,42,1,100.0000,6.0000\n"
        "2,1500,90,2,6.0000,6.0000\n");
}
