#pragma once

// Relaxed reachability analysis: per-fact estimates of how many actions and
// how much time are needed to reach each fact from a given state, plus the
// backward-chaining count of actions required to cover a goal set.  The
// forward pass ignores delete effects and numeric preconditions and applies
// every action at most once, so the estimates are cheap rather than tight.

#include <vector>

#include "tap/core.hpp"
#include "tap/ground.hpp"

namespace tap {

// Result of one forward reachability pass, anchored to the state it was
// computed from.  For a fact f:
//   num_acts[f]  -- estimated number of actions needed to reach f;
//                   0 for facts true in the anchor state, -1 if the relaxed
//                   pass never reaches f.
//   time_fact[f] -- estimated earliest finish time; 0 for anchored facts,
//                   +inf when unreachable.
//   best[f]      -- supporting action chosen for f (kStartAction for anchored
//                   facts, kNoAction when unreachable).
//   wave[f]      -- index of the forward wave that first produced f
//                   (0 = anchored, -1 = unreachable).
struct ReachabilityTable {
  Bitset anchor_state;
  std::vector<double> anchor_values;
  std::vector<int> num_acts;
  std::vector<double> time_fact;
  std::vector<ActionId> best;
  std::vector<int> wave;
  int waves = 0;                  // number of waves that produced new facts
  std::vector<ActionId> order;    // action examination order used by the pass
  long long work = 0;             // basic-operation count, for scaling tests

  bool reachable(FactId f) const { return num_acts[f] >= 0; }
};

// Identity permutation over the task's actions.
std::vector<ActionId> canonical_order(const GroundTask& task);

// Seed-determined permutation over the task's actions.  A fresh shuffle is
// drawn once per call; reusing the returned order keeps later passes
// reproducible.
std::vector<ActionId> shuffled_order(const GroundTask& task, Rng& rng);

// Forward pass from `state` (facts) and `values` (fluents; used only to
// evaluate state-dependent durations).  Each wave examines the not-yet
// applied actions in `order`, applies those whose preconditions hold in the
// fact set frozen at the start of the wave, and relaxes the per-fact
// estimates.  On num_acts ties the supporter with lower cost wins, then the
// one with the earlier supporting time.
ReachabilityTable compute_reachability(const GroundTask& task,
                                       const Bitset& state,
                                       const std::vector<double>& values,
                                       const std::vector<ActionId>& order);

// Number of distinct actions selected by backward chaining over best[] until
// every goal is covered.  Subgoals are processed lowest fact index first;
// each selected action a rewrites the open set to
//   G u Pre(a) - anchor - union of Add(b) over selected b.
// Throws std::logic_error if some goal is unreachable in `table`; callers
// must guard.  When `acts_out` is given it receives the selected actions in
// selection order.
int required_actions(const GroundTask& task, const ReachabilityTable& table,
                     const std::vector<FactId>& goals,
                     std::vector<ActionId>* acts_out = nullptr);

// Reachability for a state visited during search.  Semantically identical to
// compute_reachability(task, state, values, prev.order); when the state
// matches the anchor of `prev` the previous table is reused as-is.
ReachabilityTable refresh_reachability(const GroundTask& task,
                                       const ReachabilityTable& prev,
                                       const Bitset& state,
                                       const std::vector<double>& values);

}  // namespace tap
