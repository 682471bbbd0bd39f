#pragma once

#include <string>
#include <vector>

#include "tap/core.hpp"
#include "tap/model.hpp"

namespace tap {

// Ground numeric expression: fluent leaves refer to GroundTask::fluent_names.
struct GExpr {
  enum class Op { number, var, add, sub, mul, div, neg };
  Op op = Op::number;
  double value = 0;
  VarId var = -1;
  std::vector<GExpr> kids;

  static GExpr number(double v) {
    GExpr e;
    e.value = v;
    return e;
  }
  static GExpr variable(VarId v) {
    GExpr e;
    e.op = Op::var;
    e.var = v;
    return e;
  }
};

// Evaluates against a fluent valuation. Division by zero raises
// InputError{semantic}.
double eval_expr(const GExpr& e, const std::vector<double>& values);

// Collects every fluent read by the expression.
void collect_vars(const GExpr& e, Bitset& out);

struct NumCondition {
  Rel rel = Rel::ge;
  GExpr lhs, rhs;
};

bool holds(const NumCondition& c, const std::vector<double>& values,
           double eq_tolerance = 1e-9);

struct NumEffect {
  AssignOp op = AssignOp::increase;
  VarId var = -1;
  GExpr value;
};

void apply_effect(const NumEffect& e, std::vector<double>& values);

struct GroundAction {
  std::string name;  // "fly plane1 city0 city1"

  // Boolean conditions/effects by durative tag. STRIPS actions normalize to
  // duration 1, over-all conditions and at-end effects.
  std::vector<FactId> pre_start, pre_over, pre_end;
  std::vector<FactId> add_start, add_end;
  std::vector<FactId> del_start, del_end;
  std::vector<NumCondition> num_pre_start, num_pre_over, num_pre_end;
  std::vector<NumEffect> num_eff_start, num_eff_end;

  GExpr duration = GExpr::number(1.0);
  bool constant_duration = true;
  double duration_value = 1.0;  // valid when constant_duration

  double cost = 1.0;

  // Untagged projections used by mutex analysis, reachability and the
  // relaxed-plan machinery.
  Bitset pre, add, del;
  std::vector<FactId> pre_list, add_list, del_list;  // sorted, deduplicated

  // Fluents read (conditions + duration) and written, for the numeric mutex
  // clauses; commutes marks writes that are pure increase/decrease.
  Bitset num_reads, num_writes, num_writes_noncommuting;

  bool has_numeric_pre() const {
    return !num_pre_start.empty() || !num_pre_over.empty() || !num_pre_end.empty();
  }
};

struct LinearMetric {
  bool present = false;
  double constant = 0;
  double total_time_coeff = 0;
  std::vector<std::pair<VarId, double>> terms;

  // Metric value with the total-time term evaluated at `makespan`; without a
  // metric, callers fall back to plan length.
  double value(const std::vector<double>& fluents, double makespan) const;
};

struct GroundTask {
  std::string domain_name, problem_name;

  std::vector<std::string> fact_names;    // "(at truck1 depot)"
  std::vector<std::string> fluent_names;  // "(fuel plane1)"

  std::vector<GroundAction> actions;
  Bitset init;
  std::vector<double> init_values;

  std::vector<FactId> goals;
  std::vector<NumCondition> num_goals;

  LinearMetric metric;
  double zero_cost_eps = 0.01;

  // (p, not-p) fact pairs produced by negative-precondition compilation.
  std::vector<std::pair<FactId, FactId>> complement_pairs;

  std::vector<std::string> warnings;

  // Per-fact achiever lists (actions with the fact among their add effects).
  std::vector<std::vector<ActionId>> achievers;

  int fact_count() const { return static_cast<int>(fact_names.size()); }
  int fluent_count() const { return static_cast<int>(fluent_names.size()); }
  int action_count() const { return static_cast<int>(actions.size()); }

  void rebuild_achievers();
};

struct GroundConfig {
  // Ground instances beyond this raise InputError{resource}.
  std::size_t max_actions = 2'000'000;
  // Floor used when a metric delta would make an action free or profitable.
  double zero_cost_eps = 0.01;
};

// Instantiates the schemes over typed objects. Negative preconditions are
// compiled into complement ("not-p") facts, static predicates are evaluated
// and removed, instances with a false static precondition are dropped, and
// action costs are derived from the metric.
GroundTask ground(const Domain& domain, const Problem& problem,
                  const GroundConfig& config = {});

// Metric delta caused by the action's numeric effects, evaluated at the
// initial values with the total-time term zeroed. Falls back to 1 without a
// metric and to task.zero_cost_eps when the delta is not positive.
double action_cost(const GroundTask& task, const GroundAction& action);

// Duration against a fluent valuation; non-positive or non-finite durations
// raise InputError{semantic}.
double eval_duration(const GroundTask& task, const GroundAction& action,
                     const std::vector<double>& values);

}  // namespace tap
