#include "tap/mutex.hpp"

#include <unordered_set>

namespace tap {

std::vector<std::pair<FactId, FactId>> FactMutexSet::pairs() const {
  std::vector<std::pair<FactId, FactId>> out;
  for (FactId a = 0; a < n_; ++a)
    rows_[a].for_each([&](int b) {
      if (b > a) out.emplace_back(a, b);
    });
  return out;
}

FactMutexSet compute_mutex_facts(const GroundTask& task) {
  const int nf = task.fact_count();
  Bitset fstar = task.init;      // F*
  Bitset fprev(nf);              // F (previous iteration)
  FactMutexSet mstar(nf);        // M*
  FactMutexSet mprev(nf);        // M
  Bitset applied(task.action_count() > 0 ? task.action_count() : 1);
  bool first = true;

  while (first || fstar != fprev || mstar != mprev) {
    first = false;
    fprev = fstar;
    mprev = mstar;

    for (ActionId ai = 0; ai < task.action_count(); ++ai) {
      const GroundAction& a = task.actions[ai];
      if (!a.pre.is_subset_of(fstar)) continue;
      // Skip actions whose preconditions are currently marked mutex.
      bool mutex_pre = false;
      for (FactId p : a.pre_list)
        if (mstar.row(p).intersects(a.pre)) {
          mutex_pre = true;
          break;
        }
      if (mutex_pre) continue;

      Bitset fresh = a.add;  // New(a)
      fresh.and_not(fstar);

      // Formulate potential pairs for the genuinely new effects.
      fresh.for_each([&](int f) {
        for (FactId h : a.del_list) mstar.add(f, h);
        for (FactId p : a.pre_list) {
          // f inherits the mutexes of a's preconditions that a does not
          // resolve by deleting the other side.
          std::vector<int> qs = mstar.row(p).to_vector();
          for (int q : qs)
            if (!a.del.test(q)) mstar.add(f, q);
        }
      });

      // Both-effects invalidation only needs to run the first time: any pair
      // inside Add(a) must have been formulated while one side was new, i.e.
      // before or during this first application.
      if (!applied.test(ai)) {
        for (FactId p : a.add_list)
          for (FactId q : a.add_list)
            if (p < q && mstar.mutex(p, q)) mstar.remove(p, q);
      }

      // Persistence invalidation runs on every pass: a re-achieves i while q
      // may survive (not deleted, no mutex precondition), so (i, q) cannot be
      // persistent. On re-processing New(a) is empty and L covers all of
      // Add(a), which is what lets pairs formulated later be retired.
      Bitset carried = a.add;
      carried.and_not(fresh);  // L = Add(a) - New(a)
      carried.for_each([&](int i) {
        std::vector<int> qs = mstar.row(i).to_vector();
        for (int q : qs) {
          if (a.del.test(q)) continue;
          bool guarded = mstar.row(q).intersects(a.pre);
          if (!guarded) mstar.remove(i, q);
        }
      });

      fstar |= fresh;
      applied.set(ai);
    }
  }
  return mstar;
}

namespace {

// Adds pairs caused by one action writing numeric state the other depends on.
bool numeric_conflict(const GroundAction& a, const GroundAction& b) {
  if (a.num_writes.intersects(b.num_reads)) return true;
  if (b.num_writes.intersects(a.num_reads)) return true;
  // Write/write on a shared variable, unless both sides only add/subtract.
  Bitset shared = a.num_writes;
  shared &= b.num_writes;
  if (!shared.any()) return false;
  if (shared.intersects(a.num_writes_noncommuting)) return true;
  if (shared.intersects(b.num_writes_noncommuting)) return true;
  return false;
}

}  // namespace

ActionMutexSet compute_mutex_actions(const GroundTask& task,
                                     const FactMutexSet& facts) {
  const int m = task.action_count();
  const int nf = task.fact_count();
  ActionMutexSet out(m, nf);

  // Consumers (preconditions) and producers per fact, over domain actions.
  std::vector<std::vector<ActionId>> consumers(nf), deleters(nf);
  for (ActionId ai = 0; ai < m; ++ai) {
    for (FactId p : task.actions[ai].pre_list) consumers[p].push_back(ai);
    for (FactId p : task.actions[ai].del_list) deleters[p].push_back(ai);
  }

  // Competing needs: the extended universe contains no-op(f) with
  // precondition (and effect) {f}.
  for (const auto& [p, q] : facts.pairs()) {
    for (ActionId a : consumers[p]) {
      for (ActionId b : consumers[q]) out.add_actions(a, b);
      out.add_action_noop(a, q);
    }
    for (ActionId b : consumers[q]) out.add_action_noop(b, p);
    out.add_noops(p, q);
  }

  // Interference and inconsistent effects against domain deleters.
  for (ActionId ai = 0; ai < m; ++ai) {
    const GroundAction& a = task.actions[ai];
    for (FactId p : a.pre_list)
      for (ActionId b : deleters[p]) out.add_actions(ai, b);
    for (FactId p : a.add_list)
      for (ActionId b : deleters[p]) out.add_actions(ai, b);
  }
  // No-op(p) both needs and re-delivers p, so any deleter cuts it.
  for (FactId p = 0; p < nf; ++p)
    for (ActionId b : deleters[p]) out.add_action_noop(b, p);

  // Numeric conflicts between domain actions.
  for (ActionId ai = 0; ai < m; ++ai) {
    const GroundAction& a = task.actions[ai];
    if (!a.num_writes.any() && !a.num_reads.any()) continue;
    for (ActionId bi = ai + 1; bi < m; ++bi)
      if (numeric_conflict(a, task.actions[bi])) out.add_actions(ai, bi);
  }

  return out;
}

FactMutexSet brute_force_persistent_mutex(const GroundTask& task,
                                          std::size_t state_cap) {
  const int nf = task.fact_count();

  struct BitsetHash {
    std::size_t operator()(const std::vector<std::uint64_t>& v) const {
      std::size_t h = 1469598103934665603ull;
      for (auto w : v) {
        h ^= w;
        h *= 1099511628211ull;
      }
      return h;
    }
  };

  auto words_of = [&](const Bitset& b) {
    std::vector<std::uint64_t> w((nf + 63) / 64, 0);
    b.for_each([&](int f) { w[f >> 6] |= std::uint64_t{1} << (f & 63); });
    return w;
  };

  std::unordered_set<std::vector<std::uint64_t>, BitsetHash> seen;
  std::vector<Bitset> frontier{task.init};
  seen.insert(words_of(task.init));

  FactMutexSet never_cotrue(nf);
  for (FactId a = 0; a < nf; ++a)
    for (FactId b = a + 1; b < nf; ++b) never_cotrue.add(a, b);

  auto observe = [&](const Bitset& s) {
    auto members = s.to_vector();
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        never_cotrue.remove(members[i], members[j]);
  };
  observe(task.init);

  while (!frontier.empty()) {
    Bitset state = std::move(frontier.back());
    frontier.pop_back();
    for (const auto& a : task.actions) {
      if (!a.pre.is_subset_of(state)) continue;
      Bitset next = state;
      next.and_not(a.del);
      next |= a.add;
      if (seen.insert(words_of(next)).second) {
        if (seen.size() > state_cap)
          throw InputError(ErrorKind::resource,
                           "state space exceeds brute-force cap");
        observe(next);
        frontier.push_back(std::move(next));
      }
    }
  }
  return never_cotrue;
}

int drop_mutex_precondition_actions(GroundTask& task,
                                    const FactMutexSet& facts) {
  std::vector<GroundAction> kept;
  kept.reserve(task.actions.size());
  int dropped = 0;
  for (auto& a : task.actions) {
    bool bad = false;
    for (std::size_t i = 0; i < a.pre_over.size() && !bad; ++i)
      for (std::size_t j = i + 1; j < a.pre_over.size() && !bad; ++j)
        if (facts.mutex(a.pre_over[i], a.pre_over[j])) bad = true;
    if (bad)
      ++dropped;
    else
      kept.push_back(std::move(a));
  }
  task.actions = std::move(kept);
  if (dropped) task.rebuild_achievers();
  return dropped;
}

MutexTables analyze_task(GroundTask& task) {
  MutexTables t;
  t.facts = compute_mutex_facts(task);
  drop_mutex_precondition_actions(task, t.facts);
  t.actions = compute_mutex_actions(task, t.facts);
  return t;
}

}  // namespace tap
