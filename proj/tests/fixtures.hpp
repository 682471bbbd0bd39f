#pragma once

// Hand-built tasks shared across the test binaries: a small builder that
// assembles GroundTasks directly (bypassing the parser/grounder), the two
// worked scheduling/reachability examples used throughout the suite, and
// loaders for the bundled sample domains.

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "tap/ground.hpp"
#include "tap/model.hpp"
#include "tap/parser.hpp"

#ifndef TAPLAN_DATA_DIR
#define TAPLAN_DATA_DIR "domains"
#endif

namespace fix {

inline std::string data_path(const std::string& name) {
  return std::string(TAPLAN_DATA_DIR) + "/" + name;
}

inline tap::GroundTask load(const std::string& domain_file,
                            const std::string& problem_file,
                            const tap::GroundConfig& config = {}) {
  tap::Domain d = tap::parse_domain_file(data_path(domain_file));
  tap::Problem p = tap::parse_problem_file(data_path(problem_file), d);
  return tap::ground(d, p, config);
}

// Facts are addressed 1-based here (matching how the worked examples are
// usually written down); the stored FactId is k-1.
class TaskBuilder {
 public:
  explicit TaskBuilder(int nfacts, int nfluents = 0) {
    for (int i = 1; i <= nfacts; ++i)
      task_.fact_names.push_back("f" + std::to_string(i));
    for (int i = 1; i <= nfluents; ++i)
      task_.fluent_names.push_back("v" + std::to_string(i));
    task_.init = tap::Bitset(nfacts);
    task_.init_values.assign(nfluents, 0.0);
  }

  static tap::FactId fid(int k) { return k - 1; }

  void init_facts(std::initializer_list<int> facts) {
    for (int k : facts) task_.init.set(fid(k));
  }
  void goal_facts(std::initializer_list<int> facts) {
    for (int k : facts) task_.goals.push_back(fid(k));
  }

  // One-phase action: over-all preconditions, at-end effects.
  tap::ActionId act(const std::string& name, std::initializer_list<int> pre,
                    std::initializer_list<int> add,
                    std::initializer_list<int> del, double duration,
                    double cost = 1.0) {
    tap::GroundAction a;
    a.name = name;
    for (int k : pre) a.pre_over.push_back(fid(k));
    for (int k : add) a.add_end.push_back(fid(k));
    for (int k : del) a.del_end.push_back(fid(k));
    return push(std::move(a), duration, cost);
  }

  // Blank action for tests that fill the tagged lists themselves.
  tap::ActionId raw_act(const std::string& name, double duration,
                        double cost = 1.0) {
    tap::GroundAction a;
    a.name = name;
    return push(std::move(a), duration, cost);
  }

  tap::GroundAction& action(tap::ActionId a) { return task_.actions[a]; }

  // Computes the untagged projections the same way the grounder does and
  // builds the achiever index.  Call once, after the last action.
  tap::GroundTask& done() {
    const int nf = task_.fact_count();
    const int nv = task_.fluent_count();
    for (auto& a : task_.actions) {
      a.pre = tap::Bitset(nf);
      for (const auto* v : {&a.pre_start, &a.pre_over, &a.pre_end})
        for (tap::FactId f : *v) a.pre.set(f);
      tap::Bitset as(nf), ae(nf), ds(nf), de(nf);
      for (tap::FactId f : a.add_start) as.set(f);
      for (tap::FactId f : a.add_end) ae.set(f);
      for (tap::FactId f : a.del_start) ds.set(f);
      for (tap::FactId f : a.del_end) de.set(f);
      a.add = as;
      a.add.and_not(de);
      a.add |= ae;
      a.del = ds;
      a.del.and_not(ae);
      a.del |= de;
      a.del.and_not(a.add);
      a.pre_list = a.pre.to_vector();
      a.add_list = a.add.to_vector();
      a.del_list = a.del.to_vector();
      a.num_reads = tap::Bitset(nv);
      a.num_writes = tap::Bitset(nv);
      a.num_writes_noncommuting = tap::Bitset(nv);
      for (const auto* conds :
           {&a.num_pre_start, &a.num_pre_over, &a.num_pre_end})
        for (const auto& c : *conds) {
          tap::collect_vars(c.lhs, a.num_reads);
          tap::collect_vars(c.rhs, a.num_reads);
        }
      tap::collect_vars(a.duration, a.num_reads);
      for (const auto* effs : {&a.num_eff_start, &a.num_eff_end})
        for (const auto& e : *effs) {
          a.num_writes.set(e.var);
          if (e.op != tap::AssignOp::increase &&
              e.op != tap::AssignOp::decrease)
            a.num_writes_noncommuting.set(e.var);
        }
    }
    task_.rebuild_achievers();
    return task_;
  }

 private:
  tap::ActionId push(tap::GroundAction a, double duration, double cost) {
    a.duration = tap::GExpr::number(duration);
    a.constant_duration = true;
    a.duration_value = duration;
    a.cost = cost;
    task_.actions.push_back(std::move(a));
    return static_cast<tap::ActionId>(task_.actions.size()) - 1;
  }

  tap::GroundTask task_;
};

// Five-action scheduling example.  The plan [a1, a2, a3, a4] leaves a4's
// precondition f7 unsupported; splicing a5 in just before a4 repairs it.
// Pinned end times before the splice: 50 / 120 / 220 / 160; after it a5
// ends at 230 and a4 at 270.  Action mutex pairs: (a1,a2) over f10,
// (a2,a3) over f11, (a2,a4) over f14.
struct ScheduleExample {
  tap::GroundTask task;
  tap::ActionId a1, a2, a3, a4, a5;
};

inline ScheduleExample make_schedule_example() {
  TaskBuilder b(14);
  b.init_facts({1, 2, 3, 4, 5});
  b.goal_facts({12, 13});
  ScheduleExample e;
  e.a1 = b.act("a1", {1}, {6}, {10}, 50);
  e.a2 = b.act("a2", {2}, {8, 9, 10, 11, 14}, {}, 70);
  e.a3 = b.act("a3", {9}, {12}, {11}, 100);
  e.a4 = b.act("a4", {6, 7}, {12, 13}, {14}, 40);
  e.a5 = b.act("a5", {8}, {7}, {}, 110);
  e.task = std::move(b.done());
  return e;
}

// Seven-action reachability example.  Under the canonical examination
// order the forward pass pins (num_acts, time_fact) for f9..f17 to
// (1,10) (1,30) (1,30) (1,50) (3,80) (3,120) (2,80) (2,80) (7,140), and
// backward chaining over Pre(a7) selects {a4, a1, a2, a5, a3, a6}.
struct ReachExample {
  tap::GroundTask task;
  tap::ActionId a1, a2, a3, a4, a5, a6, a7;
};

inline ReachExample make_reach_example() {
  TaskBuilder b(17);
  b.init_facts({1, 2, 3, 4, 5, 6, 7, 8});
  b.goal_facts({17});
  ReachExample e;
  e.a1 = b.act("a1", {1}, {1, 9}, {}, 10);
  e.a2 = b.act("a2", {2}, {10, 11}, {}, 30);
  e.a3 = b.act("a3", {3}, {12}, {}, 50);
  e.a4 = b.act("a4", {1, 9, 10}, {13}, {}, 50);
  e.a5 = b.act("a5", {11, 12}, {14, 15}, {}, 70);
  e.a6 = b.act("a6", {12}, {15, 16}, {}, 30);
  e.a7 = b.act("a7", {13, 14, 16}, {17}, {}, 20);
  e.task = std::move(b.done());
  return e;
}

}  // namespace fix
