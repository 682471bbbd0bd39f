#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tap/graph.hpp"
#include "tap/mutex.hpp"
#include "tap/reach.hpp"

using namespace tap;
using fix::TaskBuilder;

namespace {

constexpr double kTol = 1e-9;

struct Rig {
  GroundTask task;
  MutexTables mutex;
  ReachabilityTable base;

  explicit Rig(GroundTask t) : task(std::move(t)) {
    mutex = analyze_task(task);
    base = compute_reachability(task, task.init, task.init_values,
                                canonical_order(task));
  }

  TAGraph graph() const { return TAGraph(task, mutex, base); }
};

Rig schedule_rig() { return Rig(fix::make_schedule_example().task); }

bool has_constraint(const std::vector<OrderingConstraint>& cs,
                    ConstraintKind kind, ActionId before, ActionId after) {
  for (const OrderingConstraint& c : cs)
    if (c.kind == kind && c.before == before && c.after == after) return true;
  return false;
}

void check_schedule_oracle(const TAGraph& g) {
  std::vector<double> expect = oracle::schedule_times(g);
  for (int l = 1; l <= g.levels(); ++l) {
    CAPTURE(l);
    CHECK(g.action_time(l) == doctest::Approx(expect[l]).epsilon(kTol));
  }
}

}  // namespace

TEST_CASE("goals already initial mean an immediate solution") {
  TaskBuilder b(2);
  b.init_facts({1, 2});
  b.goal_facts({1});
  b.act("noise", {1}, {2}, {}, 1);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_empty();
  CHECK(g.inconsistencies().empty());
  CHECK(g.is_solution());
  CHECK(g.action_count() == 0);
}

TEST_CASE("a missing goal is the lone inconsistency of the empty graph") {
  TaskBuilder b(2);
  b.init_facts({1});
  b.goal_facts({2});
  b.act("mk", {1}, {2}, {}, 1);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_empty();
  auto incs = g.inconsistencies();
  REQUIRE(incs.size() == 1);
  CHECK(incs[0].level == g.goal_level());
  CHECK(incs[0].owner == kEndAction);
  CHECK(incs[0].fact == TaskBuilder::fid(2));
  CHECK(!incs[0].numeric);
}

TEST_CASE("the empty horizon tracks the forward waves to the goals") {
  Rig rig = schedule_rig();
  TAGraph g = rig.graph();
  g.init_empty();
  CHECK(g.levels() == rig.base.waves + 2);
}

TEST_CASE("the four-action plan yields the pinned times and constraints") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a1, e.a2, e.a3, e.a4});

  CHECK(g.action_time(1) == doctest::Approx(50.0).epsilon(kTol));
  CHECK(g.action_time(2) == doctest::Approx(120.0).epsilon(kTol));
  CHECK(g.action_time(3) == doctest::Approx(220.0).epsilon(kTol));
  CHECK(g.action_time(4) == doctest::Approx(160.0).epsilon(kTol));

  // f12 at the goal level takes the earlier finishing supporter a4.
  CHECK(g.fact_time(g.goal_level(), TaskBuilder::fid(12)) ==
        doctest::Approx(160.0));
  CHECK(g.fact_supporter(g.goal_level(), TaskBuilder::fid(12)) == e.a4);

  auto incs = g.inconsistencies();
  REQUIRE(incs.size() == 1);
  CHECK(incs[0].level == 4);
  CHECK(incs[0].fact == TaskBuilder::fid(7));
  CHECK(incs[0].owner == e.a4);

  auto cs = g.ordering_constraints();
  CHECK(cs.size() == 5);
  CHECK(has_constraint(cs, ConstraintKind::causal, e.a1, e.a4));
  CHECK(has_constraint(cs, ConstraintKind::causal, e.a2, e.a3));
  CHECK(has_constraint(cs, ConstraintKind::exclusion, e.a1, e.a2));
  CHECK(has_constraint(cs, ConstraintKind::exclusion, e.a2, e.a3));
  CHECK(has_constraint(cs, ConstraintKind::exclusion, e.a2, e.a4));

  // Unsupported fact nodes fall back to the precomputed estimate.
  CHECK(g.fact_time(4, TaskBuilder::fid(7)) ==
        doctest::Approx(rig.base.time_fact[TaskBuilder::fid(7)]));

  check_schedule_oracle(g);
}

TEST_CASE("splicing the missing supporter repairs and reschedules the plan") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a1, e.a2, e.a3, e.a4});
  g.insert_action(e.a5, 4);

  CHECK(g.levels() == 5);
  CHECK(g.action_at(4) == e.a5);
  CHECK(g.action_at(5) == e.a4);
  CHECK(g.action_time(4) == doctest::Approx(230.0).epsilon(kTol));
  CHECK(g.action_time(5) == doctest::Approx(270.0).epsilon(kTol));
  CHECK(g.fact_time(5, TaskBuilder::fid(7)) == doctest::Approx(230.0));
  CHECK(g.fact_time(g.goal_level(), TaskBuilder::fid(12)) ==
        doctest::Approx(220.0));
  CHECK(g.fact_time(g.goal_level(), TaskBuilder::fid(13)) ==
        doctest::Approx(270.0));
  CHECK(g.is_solution());
  CHECK(g.makespan() == doctest::Approx(270.0));

  auto cs = g.ordering_constraints();
  CHECK(has_constraint(cs, ConstraintKind::causal, e.a2, e.a5));
  CHECK(has_constraint(cs, ConstraintKind::causal, e.a5, e.a4));

  // Replayed final state agrees with plain sequential execution.
  auto exec = oracle::execute_sequence(rig.task, g.action_sequence());
  REQUIRE(exec.has_value());
  CHECK(g.state(g.goal_level()) == exec->state);

  check_schedule_oracle(g);
}

TEST_CASE("insert and remove restore the original graph") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a1, e.a2, e.a3, e.a4});
  g.insert_action(e.a5, 4);
  g.remove_action(4);
  CHECK(g.action_sequence() ==
        std::vector<ActionId>{e.a1, e.a2, e.a3, e.a4});
  CHECK(g.action_time(3) == doctest::Approx(220.0));
  CHECK(g.inconsistencies().size() == 1);
}

TEST_CASE("inserting into an empty level reuses it without shifting") {
  Rig rig = schedule_rig();
  fix::ScheduleExample e = fix::make_schedule_example();
  TAGraph g = rig.graph();
  g.init_empty();
  int before = g.levels();
  g.insert_action(e.a1, 2);
  CHECK(g.levels() == before);
  CHECK(g.action_at(2) == e.a1);
  g.insert_action(e.a2, 2);  // occupied now: splice
  CHECK(g.levels() == before + 1);
  CHECK(g.action_at(2) == e.a2);
  CHECK(g.action_at(3) == e.a1);
}

TEST_CASE("an unsupported lone action starts at time zero") {
  Rig rig = schedule_rig();
  fix::ScheduleExample e = fix::make_schedule_example();
  TAGraph g = rig.graph();
  g.init_empty();
  g.insert_action(e.a5, 1);  // pre f8 is not initially true
  CHECK(g.action_time(1) == doctest::Approx(110.0));
  CHECK(g.action_start(1) == doctest::Approx(0.0));
}

TEST_CASE("removing the only supporter revives the goal inconsistency") {
  TaskBuilder b(2);
  b.init_facts({1});
  b.goal_facts({2});
  ActionId mk = b.act("mk", {1}, {2}, {}, 1);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_empty();
  g.insert_action(mk, 1);
  CHECK(g.is_solution());
  g.remove_action(1);
  auto incs = g.inconsistencies();
  REQUIRE(incs.size() == 1);
  CHECK(incs[0].owner == kEndAction);
}

TEST_CASE("induced pruning removes actions that fed only the removed one") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({3});
  ActionId mk2 = b.act("mk2", {1}, {2}, {}, 1);
  ActionId mk3 = b.act("mk3", {2}, {3}, {}, 1);
  Rig rig(std::move(b.done()));

  TAGraph g = rig.graph();
  g.init_from_plan({mk2, mk3});
  g.remove_action(2, true);
  CHECK(g.action_count() == 0);

  TAGraph h = rig.graph();
  h.init_from_plan({mk2, mk3});
  h.remove_action(2, false);
  CHECK(h.action_count() == 1);
  CHECK(h.action_at(1) == mk2);
  CHECK(h.supported(2).test(TaskBuilder::fid(2)));
}

TEST_CASE("at-end preconditions only delay the finish, not the start") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({3});
  ActionId prod = b.act("prod", {1}, {2}, {}, 30);
  ActionId cons = b.raw_act("cons", 100);
  b.action(cons).pre_end.push_back(TaskBuilder::fid(2));
  b.action(cons).add_end.push_back(TaskBuilder::fid(3));
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_from_plan({prod, cons});
  CHECK(g.action_time(1) == doctest::Approx(30.0));
  // The consumer may start at 0: its end (100) already clears the
  // precondition's availability at 30.
  CHECK(g.action_time(2) == doctest::Approx(100.0));
  CHECK(g.is_solution());
  check_schedule_oracle(g);
}

TEST_CASE("at-start effects support consumers from the producer's start") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({3});
  ActionId prod = b.raw_act("prod", 40);
  b.action(prod).pre_over.push_back(TaskBuilder::fid(1));
  b.action(prod).add_start.push_back(TaskBuilder::fid(2));
  ActionId cons = b.act("cons", {2}, {3}, {}, 10);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_from_plan({prod, cons});
  CHECK(g.action_time(1) == doctest::Approx(40.0));
  CHECK(g.fact_time(2, TaskBuilder::fid(2)) == doctest::Approx(0.0));
  CHECK(g.action_time(2) == doctest::Approx(10.0));
  check_schedule_oracle(g);
}

TEST_CASE("a start-phase effect satisfies the action's own end condition") {
  TaskBuilder b(2);
  b.init_facts({1});
  b.goal_facts({2});
  ActionId selfie = b.raw_act("selfie", 5);
  b.action(selfie).pre_over.push_back(TaskBuilder::fid(1));
  b.action(selfie).pre_end.push_back(TaskBuilder::fid(2));
  b.action(selfie).add_start.push_back(TaskBuilder::fid(2));
  REQUIRE(self_supported(b.action(selfie), TaskBuilder::fid(2)));
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_empty();
  g.insert_action(selfie, 1);
  CHECK(g.is_solution());
  for (const CausalLink& cl : g.causal_links())
    CHECK(!(cl.consumer == selfie && cl.fact == TaskBuilder::fid(2)));
}

TEST_CASE("deleters block no-op chains behind them") {
  TaskBuilder b(3);
  b.init_facts({1});
  b.goal_facts({2});
  ActionId adder = b.act("adder", {1}, {2}, {}, 1);
  ActionId deleter = b.act("deleter", {1}, {3}, {2}, 1);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_from_plan({adder, deleter});
  CHECK(g.supported(2).test(TaskBuilder::fid(2)));
  CHECK(!g.supported(3).test(TaskBuilder::fid(2)));
  CHECK(!g.chain_clear(1, 3, TaskBuilder::fid(2)));
  CHECK(g.chain_clear(1, 2, TaskBuilder::fid(2)));
  CHECK(!g.is_solution());
}

TEST_CASE("inconsistency lists sort by level, kind, fact") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a4});  // f6 and f7 unsupported, goals too
  auto incs = g.inconsistencies();
  REQUIRE(incs.size() == 2);  // a4 supplies both goals
  CHECK(incs[0].level == 1);
  CHECK(incs[0].fact == TaskBuilder::fid(6));
  CHECK(incs[1].level == 1);
  CHECK(incs[1].fact == TaskBuilder::fid(7));
}

TEST_CASE("numeric preconditions are tracked level by level") {
  TaskBuilder b(2, 1);
  b.init_facts({1});
  b.goal_facts({2});
  ActionId pump = b.raw_act("pump", 3);
  b.action(pump).pre_over.push_back(TaskBuilder::fid(1));
  b.action(pump).num_eff_end.push_back(
      {AssignOp::increase, 0, GExpr::number(20)});
  ActionId gate = b.raw_act("gate", 2);
  b.action(gate).pre_over.push_back(TaskBuilder::fid(1));
  b.action(gate).num_pre_over.push_back(
      {Rel::gt, GExpr::variable(0), GExpr::number(100)});
  b.action(gate).add_end.push_back(TaskBuilder::fid(2));
  GroundTask& t0 = b.done();
  t0.init_values[0] = 30.0;
  Rig rig(std::move(t0));

  TAGraph g = rig.graph();
  g.init_from_plan({pump, gate});
  CHECK(g.num_values(2)[0] == doctest::Approx(50.0));
  auto incs = g.inconsistencies();
  REQUIRE(!incs.empty());
  CHECK(incs[0].numeric);
  CHECK(incs[0].level == 2);
  CHECK(incs[0].owner == gate);
  CHECK(incs[0].num_index == 0);

  // Three more pumps push the value over the threshold (30 + 80 = 110).
  TAGraph h = rig.graph();
  h.init_from_plan({pump, pump, pump, pump, gate});
  CHECK(h.num_values(5)[0] == doctest::Approx(110.0));
  CHECK(h.is_solution());
  h.remove_action(2, false);
  auto back = h.inconsistencies();
  REQUIRE(!back.empty());
  CHECK(back[0].numeric);
  CHECK(back[0].owner == gate);
}

TEST_CASE("removal what-ifs report lost support without mutating") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a1, e.a2, e.a3, e.a4});
  auto lost = g.unsupported_after_removal(1);
  REQUIRE(lost.size() == 1);
  CHECK(lost[0].first == 4);
  CHECK(lost[0].second == TaskBuilder::fid(6));
  // Read-only: the graph still schedules as before.
  CHECK(g.action_time(4) == doctest::Approx(160.0));
  CHECK(g.action_count() == 4);
}

TEST_CASE("causal links name start and goal pseudo-actions") {
  TaskBuilder b(2);
  b.init_facts({1});
  b.goal_facts({2});
  ActionId mk = b.act("mk", {1}, {2}, {}, 1);
  Rig rig(std::move(b.done()));
  TAGraph g = rig.graph();
  g.init_from_plan({mk});
  bool saw_init = false, saw_goal = false;
  for (const CausalLink& cl : g.causal_links()) {
    if (cl.producer == kStartAction && cl.consumer == mk &&
        cl.fact == TaskBuilder::fid(1) && cl.from_level == 0)
      saw_init = true;
    if (cl.producer == mk && cl.consumer == kEndAction &&
        cl.fact == TaskBuilder::fid(2))
      saw_goal = true;
  }
  CHECK(saw_init);
  CHECK(saw_goal);
}

TEST_CASE("plans referencing unknown actions are rejected") {
  Rig rig = schedule_rig();
  TAGraph g = rig.graph();
  CHECK_THROWS_AS(g.init_from_plan({99}), std::logic_error);
  g.init_empty();
  CHECK_THROWS_AS(g.remove_action(1), std::logic_error);
}

TEST_CASE("levels topologically sort the ordering constraints") {
  fix::ScheduleExample e = fix::make_schedule_example();
  Rig rig(std::move(e.task));
  TAGraph g = rig.graph();
  g.init_from_plan({e.a1, e.a2, e.a3, e.a4});
  g.insert_action(e.a5, 4);
  for (const OrderingConstraint& c : g.ordering_constraints())
    CHECK(c.before_level < c.after_level);
}
