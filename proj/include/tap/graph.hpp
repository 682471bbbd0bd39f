#pragma once

// Linear/temporal action graph: the search-state representation.  Levels
// hold at most one domain action each; facts propagate forward through no-op
// chains until an action mutex with the no-op blocks them.  Each level
// carries the replayed boolean state and numeric tuple, per-fact support and
// times, and each action node an end time consistent with the ordering
// constraints implied by causal structure and mutex exclusion.

#include <iosfwd>
#include <vector>

#include "tap/core.hpp"
#include "tap/ground.hpp"
#include "tap/mutex.hpp"
#include "tap/reach.hpp"

namespace tap {

enum class ConstraintKind { causal, exclusion };

// `before` must end before `after` starts.  Causal constraints come from
// designated supporters, exclusion constraints from mutex pairs ordered by
// level.  Only pairs of domain actions are reported.
struct OrderingConstraint {
  ConstraintKind kind;
  ActionId before = kNoAction;
  ActionId after = kNoAction;
  int before_level = 0;
  int after_level = 0;
};

// An unsupported precondition node: boolean fact or numeric comparison.
// `owner` is the action requiring it (kEndAction for goals); `level` the
// owner's level.  For numeric inconsistencies `num_index` identifies the
// comparison within the owner's numeric precondition list (goal list for
// kEndAction) and `fact` is -1.
struct Inconsistency {
  bool numeric = false;
  int level = 0;
  FactId fact = -1;
  int num_index = -1;
  ActionId owner = kNoAction;
};

// Designated support: `producer` (kStartAction for initial facts, with
// from_level 0) supplies `fact` to `consumer` (kEndAction for goals).
struct CausalLink {
  int from_level = 0;
  ActionId producer = kNoAction;
  int to_level = 0;
  ActionId consumer = kNoAction;
  FactId fact = -1;
};

class TAGraph {
 public:
  // `table` must be reachability anchored at the initial state; it supplies
  // default times for unsupported facts and the initial horizon.
  TAGraph(const GroundTask& task, const MutexTables& mutex,
          const ReachabilityTable& table);

  // Empty graph: no domain actions, horizon = waves needed to reach the
  // goals plus two levels of slack.
  void init_empty();

  // One action per level, in sequence order.  Throws std::logic_error on an
  // out-of-range action id.
  void init_from_plan(const std::vector<ActionId>& sequence);

  // Number of action levels; the goal pseudo-level is levels() + 1.
  int levels() const { return static_cast<int>(acts_.size()) - 1; }
  int goal_level() const { return levels() + 1; }
  ActionId action_at(int level) const { return acts_[level]; }
  std::vector<ActionId> action_sequence() const;  // empty levels skipped
  int action_count() const;

  // Inserting at an occupied level (or at the goal level) splices a new
  // level and shifts later actions forward.  `level` in [1, goal_level()].
  void insert_action(ActionId a, int level);

  // Removing empties the level (no compaction).  With induced pruning the
  // actions whose designated support fed only removed actions go too.
  // Throws std::logic_error if the level holds no domain action.
  void remove_action(int level, bool induced_pruning = true);

  // Facts true after executing levels < level (state replay); level in
  // [1, goal_level()].
  const Bitset& state(int level) const { return state_[level]; }
  const std::vector<double>& num_values(int level) const { return numv_[level]; }
  // Fact nodes present at `level` (support via unblocked no-op chains).
  const Bitset& supported(int level) const { return sup_[level]; }

  // Time of fact node f at `level`: min over visible supporters of their
  // contribution; unsupported facts default to the anchored table's
  // time_fact and are never updated during search.
  double fact_time(int level, FactId f) const;
  ActionId fact_supporter(int level, FactId f) const;      // kNoAction if unsupported
  int fact_supporter_level(int level, FactId f) const;     // 0 for kStartAction

  double action_time(int level) const { return atime_[level]; }   // end time
  double duration_at(int level) const { return adur_[level]; }
  double action_start(int level) const { return atime_[level] - adur_[level]; }
  double makespan() const;   // max end time over domain actions

  std::vector<Inconsistency> inconsistencies() const;
  bool is_solution() const { return inconsistencies().empty(); }

  const std::vector<CausalLink>& causal_links() const { return links_; }
  std::vector<OrderingConstraint> ordering_constraints() const;

  // True if no action strictly between `from_level` and `to_level`
  // (exclusive) blocks the no-op chain of f.
  bool chain_clear(int from_level, int to_level, FactId f) const;

  // Precondition nodes (level, fact) of remaining actions and goals that
  // lose support when the action at `level` alone is removed.  Read-only
  // what-if used by removal evaluation.
  std::vector<std::pair<int, FactId>> unsupported_after_removal(int level) const;

  const GroundTask& task() const { return *task_; }
  const MutexTables& mutex() const { return *mutex_; }
  const ReachabilityTable& base_table() const { return *table_; }
  double default_time(FactId f) const { return table_->time_fact[f]; }

  void dump(std::ostream& os) const;

 private:
  void recompute();
  void collect_bool_inconsistencies(int level, ActionId owner,
                                    const std::vector<FactId>& pre,
                                    std::vector<Inconsistency>& out) const;

  const GroundTask* task_;
  const MutexTables* mutex_;
  const ReachabilityTable* table_;

  // acts_[0] is unused; levels are 1-based.
  std::vector<ActionId> acts_;

  // Derived per level l in [1, goal_level()]:
  std::vector<Bitset> state_;
  std::vector<Bitset> sup_;
  std::vector<std::vector<double>> numv_;
  std::vector<std::vector<double>> ftime_;        // valid where sup_ holds
  std::vector<std::vector<ActionId>> fsup_;
  std::vector<std::vector<int>> fsup_level_;
  std::vector<double> atime_;                     // per action level; 0 if empty
  std::vector<double> adur_;
  std::vector<CausalLink> links_;
};

// An at-end/over-all precondition that is also an at-start effect of the
// same action (and not an at-start precondition) needs no external
// supporter: the action establishes it itself before it is checked.
bool self_supported(const GroundAction& a, FactId f);

}  // namespace tap
