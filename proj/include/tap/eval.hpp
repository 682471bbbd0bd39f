#pragma once

// Heuristic evaluation of candidate graph changes: relaxed plans for sets of
// preconditions, the best-supporter choice, threat counting, insertion and
// removal evaluators, and the normalized three-term score that ranks
// neighborhood elements.

#include <vector>

#include "tap/core.hpp"
#include "tap/graph.hpp"
#include "tap/ground.hpp"
#include "tap/reach.hpp"

namespace tap {

// Everything a relaxed-plan construction reads about one level of the
// graph.  Plain data so tests can assemble arbitrary situations; the
// graph-backed constructor fills it from a level and a reachability table
// anchored at that level's state.
class EvalContext {
 public:
  EvalContext() = default;
  EvalContext(const TAGraph& graph, int level, const ReachabilityTable& local);

  const GroundTask* task = nullptr;
  Bitset init_facts;                  // facts true before the level
  std::vector<double> init_values;    // numeric tuple before the level
  std::vector<double> fact_time;      // Time(f) at the level, defaults included
  std::vector<int> num_acts;          // reachability from this level's state
  std::vector<double> reach_time;     // earliest-finish estimates, tie-breaks
  double sentinel_cost = 1e6;         // execution cost of the filler action
  int level = 1;

  // Number of supported precondition chains crossing this level that the
  // action would cut; the fact variant lists them.
  int threats(ActionId a) const;
  std::vector<FactId> threat_facts(ActionId a) const;

  // Test override: when set, threats() reads these instead of the graph.
  const std::vector<std::vector<FactId>>* forced_threats = nullptr;

 private:
  const TAGraph* graph_ = nullptr;
  Bitset crossing_;  // facts with a designated support chain across the level
  mutable std::vector<int> memo_;
};

struct RelaxedPlanResult {
  std::vector<ActionId> acts;   // includes the reuse set; may hold kSentinelAction
  double end_time = 0.0;
  bool sentinel = false;
};

// One evaluation session: achieved-time map and monotonic numeric bounds are
// shared across successive run() calls, as when an insertion is scored by a
// plan for the preconditions followed by a plan for the threatened facts.
class RelaxSession {
 public:
  explicit RelaxSession(const EvalContext& ctx);

  // Relaxed plan achieving `goals` (facts) and `num_goals` (comparisons)
  // from the context state, reusing `reuse` for free.  `init_override`
  // replaces the boolean part of the initial state when given.
  RelaxedPlanResult run(const std::vector<FactId>& goals,
                        const std::vector<const NumCondition*>& num_goals,
                        const std::vector<ActionId>& reuse,
                        const Bitset* init_override = nullptr);

  // Applies `reuse` (effects into the free set, numeric bounds widened)
  // without solving anything; lets tests interrogate best_action directly.
  void prime(const std::vector<ActionId>& reuse);

  // The supporter chosen for subgoal g in the current session state:
  // among achievers of g whose preconditions are all reachable, minimize
  // max num_acts over preconditions outside the free set plus the threat
  // count; ties prefer cheaper, then earlier-finishing, then lower-index
  // actions.  kNoAction when no achiever qualifies.
  ActionId best_action_bool(FactId g) const;
  // Same for a numeric subgoal: candidates are the not-yet-chosen actions
  // whose effects narrow the gap of the comparison under the current
  // bounds.
  ActionId best_action_numeric(const NumCondition& c) const;

  const std::vector<double>& vmin() const { return vmin_; }
  const std::vector<double>& vmax() const { return vmax_; }
  int calls() const { return calls_; }  // recursive invocations so far

 private:
  void add_action(ActionId a);          // into ACTS: free set + bounds
  double recurse(const std::vector<FactId>& goals,
                 const std::vector<const NumCondition*>& num_goals,
                 const Bitset& init_facts);
  double candidate_key(ActionId a, int* score_out) const;
  bool reachable_pres(ActionId a) const;

  const EvalContext* ctx_;
  std::vector<ActionId> acts_;    // grows monotonically through the session
  Bitset acts_set_;
  Bitset free_;                   // union of add effects of acts_
  std::vector<double> T_;         // achieved time per fact; NaN = unset
  std::vector<double> vmin_, vmax_;
  bool sentinel_ = false;
  int calls_ = 0;
};

// Interval evaluation of an expression under per-variable bounds.
struct Interval {
  double lo = 0.0, hi = 0.0;
};
Interval eval_interval(const GExpr& e, const std::vector<double>& vmin,
                       const std::vector<double>& vmax);

// Signed slack of a comparison under the most favorable combination of
// bounds: <= 0 iff satisfiable (for strict relations, < 0).
double favorable_gap(const NumCondition& c, const std::vector<double>& vmin,
                     const std::vector<double>& vmax);
bool favorable_holds(const NumCondition& c, const std::vector<double>& vmin,
                     const std::vector<double>& vmax);

// Insertion/removal evaluation.
struct EvalResult {
  std::vector<ActionId> acts;
  double end_time = 0.0;
  bool sentinel = false;
};

// Scores inserting action `a` against the context (threat facts and the
// earliest start forced by would-be predecessors are explicit so they can be
// fixed by tests); `t1` is that forced start, `duration` the action's
// duration at the context values.
EvalResult eval_add(const EvalContext& ctx, ActionId a, double t1,
                    double duration);

// Scores a removal whose loss is the given unsupported facts.
EvalResult eval_del(const EvalContext& ctx, const std::vector<FactId>& unsup);

// Graph-backed wrappers: `local` must be anchored at the level's state.
EvalResult eval_add(const TAGraph& graph, ActionId a, int level,
                    const ReachabilityTable& local);
EvalResult eval_del(const TAGraph& graph, int level,
                    const ReachabilityTable& local);

// Earliest start forced on `a` at `level` by the actions already in the
// graph: max end time over earlier mutex actions and the supporters of its
// supported preconditions.
double forced_start(const TAGraph& graph, ActionId a, int level);

// E-terms for one neighborhood element.
struct EvalTriple {
  double execution = 0.0;
  double temporal = 0.0;
  double search = 0.0;
};

inline constexpr double kSentinelSearchWeight = 1e6;

// removed_cost: 0 for insertions; for removals the cost of the removed
// action (subtracted per the removal formula).
EvalTriple make_triple(const EvalContext& ctx, const EvalResult& r,
                       double removed_cost);

struct Weights {
  double mu_e = 0.5;
  double mu_t = 0.0;
};

// mu_e = 1 and mu_t = the total-time coefficient when a metric is present;
// 0.5 / 0 otherwise.
Weights weights_from_metric(const GroundTask& task);

// Per-neighborhood normalizers: max_e/max_t/max_s are maxima of the
// respective terms over the neighborhood, kappa the current inconsistency
// count.  Normalizers are floored at eps.
struct ScoreContext {
  Weights w;
  int kappa = 1;
  double max_e = 0.0;
  double max_t = 0.0;
  double max_s = 0.0;
  double eps = 1e-6;
};

double score(const EvalTriple& t, const ScoreContext& s);

}  // namespace tap
