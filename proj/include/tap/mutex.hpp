#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tap/core.hpp"
#include "tap/ground.hpp"

namespace tap {

// Symmetric, irreflexive relation over facts, stored as full bit rows so
// that "any precondition of a mutex with f" is a single intersection.
class FactMutexSet {
 public:
  FactMutexSet() = default;
  explicit FactMutexSet(int n) : rows_(n, Bitset(n)), n_(n) {}

  int size() const { return n_; }
  bool mutex(FactId a, FactId b) const { return rows_[a].test(b); }
  const Bitset& row(FactId a) const { return rows_[a]; }

  void add(FactId a, FactId b) {
    if (a == b) return;
    rows_[a].set(b);
    rows_[b].set(a);
  }
  void remove(FactId a, FactId b) {
    rows_[a].reset(b);
    rows_[b].reset(a);
  }

  bool operator==(const FactMutexSet&) const = default;

  std::size_t pair_count() const {
    std::size_t total = 0;
    for (const auto& r : rows_) total += r.count();
    return total / 2;
  }
  std::vector<std::pair<FactId, FactId>> pairs() const;

 private:
  std::vector<Bitset> rows_;
  int n_ = 0;
};

// Mutex relation over domain actions and no-ops. No-op(f) occupies index
// action_count + f.
class ActionMutexSet {
 public:
  ActionMutexSet() = default;
  ActionMutexSet(int num_actions, int num_facts)
      : m_(num_actions),
        n_(num_facts),
        rows_(num_actions + num_facts, Bitset(num_actions + num_facts)),
        blocked_(num_actions, Bitset(num_facts)) {}

  int action_count() const { return m_; }
  int fact_count() const { return n_; }

  bool mutex(ActionId a, ActionId b) const { return rows_[a].test(b); }
  bool mutex_noop(ActionId a, FactId f) const { return rows_[a].test(m_ + f); }
  bool mutex_noops(FactId f, FactId g) const {
    return rows_[m_ + f].test(m_ + g);
  }

  // Facts whose no-op is mutex with `a`: the carriers this action cuts.
  const Bitset& blocked_noops(ActionId a) const { return blocked_[a]; }

  void add_actions(ActionId a, ActionId b) { link(a, b); }
  void add_action_noop(ActionId a, FactId f) {
    link(a, m_ + f);
    blocked_[a].set(f);
  }
  void add_noops(FactId f, FactId g) { link(m_ + f, m_ + g); }

  std::size_t pair_count() const {
    std::size_t total = 0;
    for (const auto& r : rows_) total += r.count();
    return total / 2;
  }

 private:
  void link(int x, int y) {
    if (x == y) return;
    rows_[x].set(y);
    rows_[y].set(x);
  }

  int m_ = 0, n_ = 0;
  std::vector<Bitset> rows_;
  std::vector<Bitset> blocked_;
};

// Fixed-point computation of persistently mutex fact pairs over the untagged
// projection of the full action universe.
FactMutexSet compute_mutex_facts(const GroundTask& task);

// Pairwise action/no-op mutex relation: competing needs over the given fact
// mutexes, interference, inconsistent effects, plus numeric read/write and
// non-commuting write/write conflicts.
ActionMutexSet compute_mutex_actions(const GroundTask& task,
                                     const FactMutexSet& facts);

// Reference oracle: enumerates every reachable boolean state (numeric
// conditions ignored) and reports fact pairs that never co-occur. Raises
// InputError{resource} beyond `state_cap` states.
FactMutexSet brute_force_persistent_mutex(const GroundTask& task,
                                          std::size_t state_cap = 200000);

// Removes instances whose over-all precondition facts contain a persistent
// mutex pair; returns how many were dropped. Rebuilds the achiever index.
int drop_mutex_precondition_actions(GroundTask& task, const FactMutexSet& facts);

struct MutexTables {
  FactMutexSet facts;
  ActionMutexSet actions;
};

// Full pipeline: fact mutexes over the grounded universe, exclusion of
// instances with mutex over-all preconditions, then the action table.
MutexTables analyze_task(GroundTask& task);

}  // namespace tap
