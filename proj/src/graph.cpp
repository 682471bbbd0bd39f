#include "tap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace tap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool contains(const std::vector<FactId>& v, FactId f) {
  return std::binary_search(v.begin(), v.end(), f);
}

}  // namespace

bool self_supported(const GroundAction& a, FactId f) {
  if (contains(a.pre_start, f)) return false;
  if (!contains(a.pre_over, f) && !contains(a.pre_end, f)) return false;
  return contains(a.add_start, f);
}

TAGraph::TAGraph(const GroundTask& task, const MutexTables& mutex,
                 const ReachabilityTable& table)
    : task_(&task), mutex_(&mutex), table_(&table) {
  init_empty();
}

void TAGraph::init_empty() {
  int horizon = 0;
  for (FactId g : task_->goals)
    if (table_->wave[g] >= 0) horizon = std::max(horizon, table_->wave[g]);
  if (!task_->num_goals.empty()) horizon = std::max(horizon, table_->waves);
  acts_.assign(static_cast<std::size_t>(horizon) + 3, kNoAction);  // +2 slack, 1-based
  recompute();
}

void TAGraph::init_from_plan(const std::vector<ActionId>& sequence) {
  acts_.assign(1, kNoAction);
  for (ActionId a : sequence) {
    if (a < 0 || a >= static_cast<ActionId>(task_->actions.size()))
      throw std::logic_error("init_from_plan: unknown action id");
    acts_.push_back(a);
  }
  if (acts_.size() == 1) acts_.push_back(kNoAction);
  recompute();
}

std::vector<ActionId> TAGraph::action_sequence() const {
  std::vector<ActionId> seq;
  for (int l = 1; l <= levels(); ++l)
    if (acts_[l] != kNoAction) seq.push_back(acts_[l]);
  return seq;
}

int TAGraph::action_count() const {
  int c = 0;
  for (int l = 1; l <= levels(); ++l)
    if (acts_[l] != kNoAction) ++c;
  return c;
}

void TAGraph::insert_action(ActionId a, int level) {
  if (a < 0 || a >= static_cast<ActionId>(task_->actions.size()))
    throw std::logic_error("insert_action: unknown action id");
  if (level < 1 || level > goal_level())
    throw std::logic_error("insert_action: level out of range");
  if (level <= levels() && acts_[level] == kNoAction) {
    acts_[level] = a;
  } else {
    // Occupied level (or the goal level): splice a new level, shifting the
    // levels from `level` on forward.
    acts_.insert(acts_.begin() + level, a);
  }
  recompute();
}

void TAGraph::remove_action(int level, bool induced_pruning) {
  if (level < 1 || level > levels() || acts_[level] == kNoAction)
    throw std::logic_error("remove_action: no action at level");

  std::vector<char> removed(acts_.size(), 0);
  removed[level] = 1;
  if (induced_pruning) {
    // Drop any action whose designated support went only to already-removed
    // actions, repeatedly.  Links to surviving actions or to the goals keep
    // a supporter alive; so does supporting nothing at all.
    bool changed = true;
    while (changed) {
      changed = false;
      for (int l = 1; l <= levels(); ++l) {
        if (removed[l] || acts_[l] == kNoAction) continue;
        bool feeds = false, feeds_live = false;
        for (const CausalLink& cl : links_) {
          if (cl.from_level != l || cl.producer == kStartAction) continue;
          feeds = true;
          if (cl.consumer == kEndAction || !removed[cl.to_level]) {
            feeds_live = true;
            break;
          }
        }
        if (feeds && !feeds_live) {
          removed[l] = 1;
          changed = true;
        }
      }
    }
  }
  for (int l = 1; l <= levels(); ++l)
    if (removed[l]) acts_[l] = kNoAction;
  recompute();
}

double TAGraph::fact_time(int level, FactId f) const {
  if (sup_[level].test(f)) return ftime_[level][f];
  return table_->time_fact[f];
}

ActionId TAGraph::fact_supporter(int level, FactId f) const {
  return sup_[level].test(f) ? fsup_[level][f] : kNoAction;
}

int TAGraph::fact_supporter_level(int level, FactId f) const {
  return sup_[level].test(f) ? fsup_level_[level][f] : -1;
}

double TAGraph::makespan() const {
  double m = 0.0;
  for (int l = 1; l <= levels(); ++l)
    if (acts_[l] != kNoAction) m = std::max(m, atime_[l]);
  return m;
}

bool TAGraph::chain_clear(int from_level, int to_level, FactId f) const {
  for (int l = from_level + 1; l < to_level; ++l) {
    ActionId b = acts_[l];
    if (b != kNoAction && mutex_->actions.blocked_noops(b).test(f)) return false;
  }
  return true;
}

void TAGraph::recompute() {
  const int L = levels();
  const std::size_t n = task_->fact_names.size();

  state_.assign(L + 2, Bitset(n));
  sup_.assign(L + 2, Bitset(n));
  numv_.assign(L + 2, {});
  ftime_.assign(L + 2, std::vector<double>(n, kInf));
  fsup_.assign(L + 2, std::vector<ActionId>(n, kNoAction));
  fsup_level_.assign(L + 2, std::vector<int>(n, -1));
  atime_.assign(L + 2, 0.0);
  adur_.assign(L + 2, 0.0);
  links_.clear();

  state_[1] = task_->init;
  sup_[1] = task_->init;
  numv_[1] = task_->init_values;
  task_->init.for_each([&](int f) {
    ftime_[1][f] = 0.0;
    fsup_[1][f] = kStartAction;
    fsup_level_[1][f] = 0;
  });

  for (int l = 1; l <= L; ++l) {
    ActionId ai = acts_[l];
    if (ai == kNoAction) {
      state_[l + 1] = state_[l];
      sup_[l + 1] = sup_[l];
      numv_[l + 1] = numv_[l];
      ftime_[l + 1] = ftime_[l];
      fsup_[l + 1] = fsup_[l];
      fsup_level_[l + 1] = fsup_level_[l];
      continue;
    }
    const GroundAction& a = task_->actions[ai];
    double d = eval_duration(*task_, a, numv_[l]);
    adur_[l] = d;

    // End time: duration plus the max over supported precondition
    // contributions and the end times of earlier mutex actions.  At-end
    // preconditions only need to hold by the end, so they contribute
    // Time(p) - duration; self-established preconditions contribute nothing.
    double t = 0.0;
    auto consider = [&](FactId f, bool at_end) {
      if (self_supported(a, f)) return;
      if (!sup_[l].test(f)) return;
      double tf = ftime_[l][f];
      t = std::max(t, at_end ? tf - d : tf);
    };
    for (FactId f : a.pre_start) consider(f, false);
    for (FactId f : a.pre_over) consider(f, false);
    for (FactId f : a.pre_end) consider(f, true);
    for (int j = 1; j < l; ++j)
      if (acts_[j] != kNoAction && mutex_->actions.mutex(acts_[j], ai))
        t = std::max(t, atime_[j]);
    atime_[l] = t + d;

    // Support links for this action's satisfied preconditions.
    for (FactId f : a.pre_list) {
      if (self_supported(a, f)) continue;
      if (sup_[l].test(f))
        links_.push_back({fsup_level_[l][f], fsup_[l][f], l, ai, f});
    }

    // Next level: replayed state, numeric tuple (start phase then end
    // phase), then fact support and times.
    state_[l + 1] = state_[l];
    state_[l + 1].and_not(a.del);
    state_[l + 1] |= a.add;

    numv_[l + 1] = numv_[l];
    for (const NumEffect& e : a.num_eff_start) apply_effect(e, numv_[l + 1]);
    for (const NumEffect& e : a.num_eff_end) apply_effect(e, numv_[l + 1]);

    // Blocking this level's no-ops discards every earlier supporter of the
    // fact (all of their chains pass through this level); the action's own
    // add is then the only candidate.
    const Bitset& blocked = mutex_->actions.blocked_noops(ai);
    sup_[l + 1] = sup_[l];
    sup_[l + 1].and_not(blocked);
    sup_[l + 1] |= a.add;
    ftime_[l + 1] = ftime_[l];
    fsup_[l + 1] = fsup_[l];
    fsup_level_[l + 1] = fsup_level_[l];
    blocked.for_each([&](int f) {
      ftime_[l + 1][f] = kInf;
      fsup_[l + 1][f] = kNoAction;
      fsup_level_[l + 1][f] = -1;
    });
    a.add.for_each([&](int f) {
      // Contribution of this action to fact f: end time for at-end adds,
      // start time for at-start adds (min if somehow both).
      double c = contains(a.add_end, f) ? atime_[l] : kInf;
      if (contains(a.add_start, f)) c = std::min(c, atime_[l] - d);
      bool was = sup_[l].test(f) && !blocked.test(f);
      if (!was || c < ftime_[l + 1][f]) {
        ftime_[l + 1][f] = c;
        fsup_[l + 1][f] = ai;
        fsup_level_[l + 1][f] = l;
      }
    });
  }

  // Goal support links.
  for (FactId g : task_->goals)
    if (sup_[L + 1].test(g))
      links_.push_back(
          {fsup_level_[L + 1][g], fsup_[L + 1][g], L + 1, kEndAction, g});
}

void TAGraph::collect_bool_inconsistencies(
    int level, ActionId owner, const std::vector<FactId>& pre,
    std::vector<Inconsistency>& out) const {
  for (FactId f : pre) {
    if (owner >= 0 && self_supported(task_->actions[owner], f)) continue;
    if (!sup_[level].test(f)) out.push_back({false, level, f, -1, owner});
  }
}

std::vector<Inconsistency> TAGraph::inconsistencies() const {
  std::vector<Inconsistency> out;
  for (int l = 1; l <= levels(); ++l) {
    ActionId ai = acts_[l];
    if (ai == kNoAction) continue;
    const GroundAction& a = task_->actions[ai];
    collect_bool_inconsistencies(l, ai, a.pre_list, out);
    // Numeric preconditions evaluate against this level's tuple; at-end
    // ones against it after the action's own start-phase effects.
    int idx = 0;
    std::vector<double> after_start;
    for (const auto* conds : {&a.num_pre_start, &a.num_pre_over, &a.num_pre_end}) {
      bool at_end = conds == &a.num_pre_end;
      for (const NumCondition& c : *conds) {
        const std::vector<double>* vals = &numv_[l];
        if (at_end && !a.num_eff_start.empty()) {
          if (after_start.empty()) {
            after_start = numv_[l];
            for (const NumEffect& e : a.num_eff_start)
              apply_effect(e, after_start);
          }
          vals = &after_start;
        }
        if (!holds(c, *vals)) out.push_back({true, l, -1, idx, ai});
        ++idx;
      }
    }
  }
  int gl = goal_level();
  collect_bool_inconsistencies(gl, kEndAction, task_->goals, out);
  for (std::size_t i = 0; i < task_->num_goals.size(); ++i)
    if (!holds(task_->num_goals[i], numv_[gl]))
      out.push_back({true, gl, -1, static_cast<int>(i), kEndAction});

  std::sort(out.begin(), out.end(),
            [](const Inconsistency& x, const Inconsistency& y) {
              if (x.level != y.level) return x.level < y.level;
              if (x.numeric != y.numeric) return !x.numeric;  // boolean first
              if (x.fact != y.fact) return x.fact < y.fact;
              return x.num_index < y.num_index;
            });
  return out;
}

std::vector<OrderingConstraint> TAGraph::ordering_constraints() const {
  std::vector<OrderingConstraint> out;
  for (const CausalLink& cl : links_)
    if (cl.producer >= 0 && cl.consumer >= 0)
      out.push_back({ConstraintKind::causal, cl.producer, cl.consumer,
                     cl.from_level, cl.to_level});
  for (int i = 1; i <= levels(); ++i) {
    if (acts_[i] == kNoAction) continue;
    for (int j = i + 1; j <= levels(); ++j) {
      if (acts_[j] == kNoAction) continue;
      if (mutex_->actions.mutex(acts_[i], acts_[j]))
        out.push_back(
            {ConstraintKind::exclusion, acts_[i], acts_[j], i, j});
    }
  }
  return out;
}

std::vector<std::pair<int, FactId>> TAGraph::unsupported_after_removal(
    int level) const {
  const std::size_t n = task_->fact_names.size();
  // Forward support recomputation with `level` treated as empty.
  std::vector<Bitset> sup2(acts_.size() + 1, Bitset(n));
  sup2[1] = task_->init;
  for (int l = 1; l <= levels(); ++l) {
    ActionId ai = l == level ? kNoAction : acts_[l];
    if (ai == kNoAction) {
      sup2[l + 1] = sup2[l];
      continue;
    }
    const GroundAction& a = task_->actions[ai];
    sup2[l + 1] = sup2[l];
    sup2[l + 1].and_not(mutex_->actions.blocked_noops(ai));
    sup2[l + 1] |= a.add;
  }
  std::vector<std::pair<int, FactId>> out;
  auto scan = [&](int l, ActionId owner, const std::vector<FactId>& pre) {
    for (FactId f : pre) {
      if (owner >= 0 && self_supported(task_->actions[owner], f)) continue;
      if (sup_[l].test(f) && !sup2[l].test(f)) out.push_back({l, f});
    }
  };
  for (int l = 1; l <= levels(); ++l)
    if (l != level && acts_[l] != kNoAction)
      scan(l, acts_[l], task_->actions[acts_[l]].pre_list);
  scan(goal_level(), kEndAction, task_->goals);
  return out;
}

void TAGraph::dump(std::ostream& os) const {
  os << "graph: " << levels() << " levels, " << action_count() << " actions\n";
  for (int l = 1; l <= levels(); ++l) {
    if (acts_[l] == kNoAction) continue;
    const GroundAction& a = task_->actions[acts_[l]];
    os << "  level " << l << ": (" << a.name << ") start "
       << action_start(l) << " end " << atime_[l] << " dur " << adur_[l]
       << "\n";
  }
  os << "  goal level " << goal_level() << ":";
  for (FactId g : task_->goals)
    os << ' ' << task_->fact_names[g]
       << (sup_[goal_level()].test(g) ? "" : "(-)");
  os << "\n";
}

}  // namespace tap
