#include "tap/reach.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace tap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double action_duration(const GroundTask& task, const GroundAction& a,
                       const std::vector<double>& values) {
  if (a.constant_duration) return a.duration_value;
  return eval_duration(task, a, values);
}

// Backward chaining core shared by the public entry point and the forward
// pass (which calls it mid-construction, when best[] is defined exactly for
// the facts already in F).
int required_actions_core(const GroundTask& task, const Bitset& anchor,
                          const std::vector<ActionId>& best,
                          const std::vector<FactId>& goals,
                          std::vector<ActionId>* acts_out,
                          long long* work) {
  std::set<FactId> open;
  for (FactId g : goals)
    if (!anchor.test(g)) open.insert(g);

  std::vector<ActionId> acts;
  Bitset chosen(task.actions.size());
  Bitset chosen_adds(task.fact_names.size());

  while (!open.empty()) {
    FactId g = *open.begin();
    open.erase(open.begin());
    if (work) ++*work;
    ActionId a = best[g];
    if (a == kNoAction)
      throw std::logic_error("required_actions: goal fact is unreachable");
    if (a == kStartAction || chosen.test(a)) continue;
    chosen.set(a);
    acts.push_back(a);
    const GroundAction& ga = task.actions[a];
    chosen_adds |= ga.add;
    // G <- G u Pre(a) - anchor - union of adds of the chosen actions.
    for (auto it = open.begin(); it != open.end();)
      it = ga.add.test(*it) ? open.erase(it) : std::next(it);
    for (FactId p : ga.pre_list)
      if (!anchor.test(p) && !chosen_adds.test(p)) open.insert(p);
  }
  if (acts_out) *acts_out = std::move(acts);
  return static_cast<int>(chosen.count());
}

}  // namespace

std::vector<ActionId> canonical_order(const GroundTask& task) {
  std::vector<ActionId> order(task.actions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<ActionId>(i);
  return order;
}

std::vector<ActionId> shuffled_order(const GroundTask& task, Rng& rng) {
  std::vector<ActionId> order = canonical_order(task);
  rng.shuffle(order);
  return order;
}

ReachabilityTable compute_reachability(const GroundTask& task,
                                       const Bitset& state,
                                       const std::vector<double>& values,
                                       const std::vector<ActionId>& order) {
  const std::size_t n = task.fact_names.size();
  const std::size_t m = task.actions.size();

  ReachabilityTable t;
  t.anchor_state = state;
  t.anchor_values = values;
  t.order = order;
  t.num_acts.assign(n, -1);
  t.time_fact.assign(n, kInf);
  t.best.assign(n, kNoAction);
  t.wave.assign(n, -1);

  Bitset reached = state;  // F: facts reached so far, frozen per wave
  state.for_each([&](int f) {
    t.num_acts[f] = 0;
    t.time_fact[f] = 0.0;
    t.best[f] = kStartAction;
    t.wave[f] = 0;
  });

  // Supporting time achieved by best[f] when it was chosen; time_fact[f] can
  // be improved by a different action, so ties need this separately.
  std::vector<double> sup_time(n, kInf);

  Bitset applied(m);
  Bitset fresh(n);
  std::vector<FactId> fresh_list;

  for (;;) {
    fresh.clear();
    fresh_list.clear();

    for (ActionId ai : order) {
      if (applied.test(ai)) continue;
      const GroundAction& a = task.actions[ai];
      ++t.work;
      if (!a.pre.is_subset_of(reached)) continue;
      applied.set(ai);

      int ra = required_actions_core(task, t.anchor_state, t.best, a.pre_list,
                                     nullptr, &t.work);
      double pt = 0.0;
      for (FactId p : a.pre_list) pt = std::max(pt, t.time_fact[p]);
      double done = pt + action_duration(task, a, values);

      for (FactId f : a.add_list) {
        ++t.work;
        bool seen = reached.test(f) || fresh.test(f);
        if (!seen || t.time_fact[f] > done) t.time_fact[f] = done;
        if (!seen || t.num_acts[f] > ra + 1) {
          t.num_acts[f] = ra + 1;
          t.best[f] = ai;
          sup_time[f] = done;
        } else if (t.num_acts[f] == ra + 1 && t.best[f] >= 0) {
          // Equal action count: prefer the cheaper supporter, then the one
          // finishing earlier.
          double bc = task.actions[t.best[f]].cost;
          if (a.cost < bc || (a.cost == bc && done < sup_time[f])) {
            t.best[f] = ai;
            sup_time[f] = done;
          }
        }
        if (!seen) {
          fresh.set(f);
          fresh_list.push_back(f);
        }
      }
    }

    if (fresh_list.empty()) break;
    ++t.waves;
    for (FactId f : fresh_list) {
      reached.set(f);
      t.wave[f] = t.waves;
    }
  }
  return t;
}

int required_actions(const GroundTask& task, const ReachabilityTable& table,
                     const std::vector<FactId>& goals,
                     std::vector<ActionId>* acts_out) {
  for (FactId g : goals)
    if (!table.anchor_state.test(g) && table.num_acts[g] < 0)
      throw std::logic_error("required_actions: goal fact is unreachable");
  return required_actions_core(task, table.anchor_state, table.best, goals,
                               acts_out, nullptr);
}

ReachabilityTable refresh_reachability(const GroundTask& task,
                                       const ReachabilityTable& prev,
                                       const Bitset& state,
                                       const std::vector<double>& values) {
  if (state == prev.anchor_state && values == prev.anchor_values) return prev;
  return compute_reachability(task, state, values, prev.order);
}

}  // namespace tap
