#include "tap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGapEps = 1e-12;

double max_action_cost(const GroundTask& task) {
  double m = 0.0;
  for (const auto& a : task.actions) m = std::max(m, a.cost);
  return m > 0.0 ? m : 1.0;
}

Interval imul(Interval a, Interval b) {
  double c0 = a.lo * b.lo, c1 = a.lo * b.hi, c2 = a.hi * b.lo, c3 = a.hi * b.hi;
  return {std::min(std::min(c0, c1), std::min(c2, c3)),
          std::max(std::max(c0, c1), std::max(c2, c3))};
}

Interval idiv(Interval a, Interval b) {
  if (b.lo <= 0.0 && 0.0 <= b.hi) return {-kInf, kInf};
  double c0 = a.lo / b.lo, c1 = a.lo / b.hi, c2 = a.hi / b.lo, c3 = a.hi / b.hi;
  return {std::min(std::min(c0, c1), std::min(c2, c3)),
          std::max(std::max(c0, c1), std::max(c2, c3))};
}

double ctx_duration(const EvalContext& ctx, ActionId a) {
  return eval_duration(*ctx.task, ctx.task->actions[a], ctx.init_values);
}

// Widens [lo, hi] by one application of the action's numeric effects, with
// effect expressions evaluated against [eval_lo, eval_hi].
void widen_bounds(const GroundAction& ga, const std::vector<double>& eval_lo,
                  const std::vector<double>& eval_hi, std::vector<double>& lo,
                  std::vector<double>& hi) {
  for (const auto* effs : {&ga.num_eff_start, &ga.num_eff_end}) {
    for (const NumEffect& e : *effs) {
      Interval cur{lo[e.var], hi[e.var]};
      Interval val = eval_interval(e.value, eval_lo, eval_hi);
      Interval next;
      switch (e.op) {
        case AssignOp::assign: next = val; break;
        case AssignOp::increase: next = {cur.lo + val.lo, cur.hi + val.hi}; break;
        case AssignOp::decrease: next = {cur.lo - val.hi, cur.hi - val.lo}; break;
        case AssignOp::scale_up: next = imul(cur, val); break;
        case AssignOp::scale_down: next = idiv(cur, val); break;
      }
      lo[e.var] = std::min(lo[e.var], next.lo);
      hi[e.var] = std::max(hi[e.var], next.hi);
    }
  }
}

}  // namespace

Interval eval_interval(const GExpr& e, const std::vector<double>& vmin,
                       const std::vector<double>& vmax) {
  switch (e.op) {
    case GExpr::Op::number:
      return {e.value, e.value};
    case GExpr::Op::var:
      return {vmin[e.var], vmax[e.var]};
    case GExpr::Op::add: {
      Interval l = eval_interval(e.kids[0], vmin, vmax);
      Interval r = eval_interval(e.kids[1], vmin, vmax);
      return {l.lo + r.lo, l.hi + r.hi};
    }
    case GExpr::Op::sub: {
      Interval l = eval_interval(e.kids[0], vmin, vmax);
      Interval r = eval_interval(e.kids[1], vmin, vmax);
      return {l.lo - r.hi, l.hi - r.lo};
    }
    case GExpr::Op::mul:
      return imul(eval_interval(e.kids[0], vmin, vmax),
                  eval_interval(e.kids[1], vmin, vmax));
    case GExpr::Op::div:
      return idiv(eval_interval(e.kids[0], vmin, vmax),
                  eval_interval(e.kids[1], vmin, vmax));
    case GExpr::Op::neg: {
      Interval x = eval_interval(e.kids[0], vmin, vmax);
      return {-x.hi, -x.lo};
    }
  }
  return {};
}

double favorable_gap(const NumCondition& c, const std::vector<double>& vmin,
                     const std::vector<double>& vmax) {
  Interval l = eval_interval(c.lhs, vmin, vmax);
  Interval r = eval_interval(c.rhs, vmin, vmax);
  switch (c.rel) {
    case Rel::gt:
    case Rel::ge:
      return r.lo - l.hi;  // want lhs high, rhs low
    case Rel::lt:
    case Rel::le:
      return l.lo - r.hi;
    case Rel::eq:
      // Satisfiable iff the intervals overlap.
      return std::max(l.lo - r.hi, r.lo - l.hi);
  }
  return 0.0;
}

bool favorable_holds(const NumCondition& c, const std::vector<double>& vmin,
                     const std::vector<double>& vmax) {
  double g = favorable_gap(c, vmin, vmax);
  if (c.rel == Rel::gt || c.rel == Rel::lt) return g < 0.0;
  return g <= 1e-9;
}

EvalContext::EvalContext(const TAGraph& graph, int level,
                         const ReachabilityTable& local)
    : task(&graph.task()),
      init_facts(graph.state(level)),
      init_values(graph.num_values(level)),
      num_acts(local.num_acts),
      reach_time(local.time_fact),
      level(level),
      graph_(&graph) {
  const std::size_t n = task->fact_names.size();
  fact_time.resize(n);
  for (std::size_t f = 0; f < n; ++f)
    fact_time[f] = graph.fact_time(level, static_cast<FactId>(f));
  sentinel_cost = 1e6 * max_action_cost(*task);
  crossing_ = Bitset(n);
  for (const CausalLink& cl : graph.causal_links())
    if (cl.from_level < level && level <= cl.to_level) crossing_.set(cl.fact);
}

int EvalContext::threats(ActionId a) const {
  if (forced_threats) {
    return a < static_cast<ActionId>(forced_threats->size())
               ? static_cast<int>((*forced_threats)[a].size())
               : 0;
  }
  if (!graph_) return 0;
  if (memo_.empty()) memo_.assign(task->actions.size(), -1);
  if (memo_[a] < 0) {
    Bitset cut = graph_->mutex().actions.blocked_noops(a);
    cut &= crossing_;
    memo_[a] = static_cast<int>(cut.count());
  }
  return memo_[a];
}

std::vector<FactId> EvalContext::threat_facts(ActionId a) const {
  if (forced_threats) {
    if (a < static_cast<ActionId>(forced_threats->size()))
      return (*forced_threats)[a];
    return {};
  }
  if (!graph_) return {};
  Bitset cut = graph_->mutex().actions.blocked_noops(a);
  cut &= crossing_;
  std::vector<FactId> out;
  cut.for_each([&](int f) { out.push_back(f); });
  return out;
}

RelaxSession::RelaxSession(const EvalContext& ctx) : ctx_(&ctx) {
  const std::size_t n = ctx.task->fact_names.size();
  acts_set_ = Bitset(ctx.task->actions.size());
  free_ = Bitset(n);
  T_.assign(n, std::numeric_limits<double>::quiet_NaN());
  vmin_ = ctx.init_values;
  vmax_ = ctx.init_values;
}

void RelaxSession::add_action(ActionId a) {
  if (a == kSentinelAction) {
    acts_.push_back(a);
    return;
  }
  if (acts_set_.test(a)) return;
  acts_set_.set(a);
  acts_.push_back(a);
  const GroundAction& ga = ctx_->task->actions[a];
  free_ |= ga.add;
  widen_bounds(ga, vmin_, vmax_, vmin_, vmax_);
}

void RelaxSession::prime(const std::vector<ActionId>& reuse) {
  for (ActionId a : reuse) add_action(a);
}

bool RelaxSession::reachable_pres(ActionId a) const {
  for (FactId p : ctx_->task->actions[a].pre_list)
    if (ctx_->num_acts[p] < 0) return false;
  return true;
}

double RelaxSession::candidate_key(ActionId a, int* score_out) const {
  // Max num_acts over preconditions not already provided by the plan, plus
  // the candidate's threat count; numeric preconditions count 1 unless the
  // current bounds already satisfy them.
  const GroundAction& ga = ctx_->task->actions[a];
  int worst = 0;
  for (FactId p : ga.pre_list)
    if (!free_.test(p)) worst = std::max(worst, ctx_->num_acts[p]);
  for (const auto* conds : {&ga.num_pre_start, &ga.num_pre_over, &ga.num_pre_end})
    for (const NumCondition& c : *conds)
      if (!favorable_holds(c, vmin_, vmax_)) worst = std::max(worst, 1);
  if (score_out) *score_out = worst + ctx_->threats(a);
  // Tie-break estimate: earliest finish from the reachability times.
  double t = 0.0;
  for (FactId p : ga.pre_list) t = std::max(t, ctx_->reach_time[p]);
  return t + ctx_duration(*ctx_, a);
}

ActionId RelaxSession::best_action_bool(FactId g) const {
  ActionId best = kNoAction;
  int best_score = 0;
  double best_cost = 0.0, best_time = 0.0;
  for (ActionId a : ctx_->task->achievers[g]) {
    if (!reachable_pres(a)) continue;
    int sc = 0;
    double t = candidate_key(a, &sc);
    double cost = ctx_->task->actions[a].cost;
    if (best == kNoAction || sc < best_score ||
        (sc == best_score &&
         (cost < best_cost || (cost == best_cost && t < best_time)))) {
      best = a;
      best_score = sc;
      best_cost = cost;
      best_time = t;
    }
  }
  return best;
}

ActionId RelaxSession::best_action_numeric(const NumCondition& c) const {
  double gap = favorable_gap(c, vmin_, vmax_);
  ActionId best = kNoAction;
  int best_score = 0;
  double best_cost = 0.0, best_time = 0.0;
  for (ActionId a = 0; a < static_cast<ActionId>(ctx_->task->actions.size());
       ++a) {
    if (acts_set_.test(a)) continue;  // its effect is already in the bounds
    const GroundAction& ga = ctx_->task->actions[a];
    if (!ga.num_writes.any()) continue;
    if (!reachable_pres(a)) continue;
    std::vector<double> lo = vmin_, hi = vmax_;
    widen_bounds(ga, vmin_, vmax_, lo, hi);
    if (!(favorable_gap(c, lo, hi) < gap - kGapEps)) continue;
    int sc = 0;
    double t = candidate_key(a, &sc);
    double cost = ga.cost;
    if (best == kNoAction || sc < best_score ||
        (sc == best_score &&
         (cost < best_cost || (cost == best_cost && t < best_time)))) {
      best = a;
      best_score = sc;
      best_cost = cost;
      best_time = t;
    }
  }
  return best;
}

double RelaxSession::recurse(const std::vector<FactId>& goals,
                             const std::vector<const NumCondition*>& num_goals,
                             const Bitset& init_facts) {
  ++calls_;
  // Times of goals already true in the initial state.
  double t = 0.0;
  std::vector<FactId> open;
  for (FactId g : goals) {
    if (init_facts.test(g))
      t = std::max(t, ctx_->fact_time[g]);
    else
      open.push_back(g);
  }
  // Times of goals already provided by the plan under construction.
  for (FactId g : open)
    if (free_.test(g) && !std::isnan(T_[g])) t = std::max(t, T_[g]);

  std::vector<const NumCondition*> open_num(num_goals);

  while (!sentinel_) {
    // Retire numeric subgoals the bounds now satisfy.
    for (auto& c : open_num)
      if (c && favorable_holds(*c, vmin_, vmax_)) c = nullptr;

    // Next subgoal: hardest first (largest num_acts, numeric counting 1);
    // booleans win ties, then the lower fact index.
    FactId pick = -1;
    int pick_na = 0;
    for (FactId g : open) {
      if (free_.test(g)) continue;
      int na = ctx_->num_acts[g];
      if (pick == -1 || na > pick_na || (na == pick_na && g < pick)) {
        pick = g;
        pick_na = na;
      }
    }
    const NumCondition* pick_num = nullptr;
    if (pick == -1 || pick_na < 1)
      for (const auto* c : open_num)
        if (c) {
          pick_num = c;
          break;
        }
    if (pick == -1 && !pick_num) break;

    ActionId chosen =
        pick_num ? best_action_numeric(*pick_num) : best_action_bool(pick);
    if (chosen == kNoAction) {
      // No way to support the subgoal: force termination with the filler.
      sentinel_ = true;
      add_action(kSentinelAction);
      break;
    }
    const GroundAction& ga = ctx_->task->actions[chosen];
    std::vector<const NumCondition*> sub_num;
    for (const auto* conds :
         {&ga.num_pre_start, &ga.num_pre_over, &ga.num_pre_end})
      for (const NumCondition& c : *conds) sub_num.push_back(&c);
    double sub_end = recurse(ga.pre_list, sub_num, init_facts);
    if (sentinel_) break;
    double done = sub_end + ctx_duration(*ctx_, chosen);
    for (FactId f : ga.add_list)
      if (!free_.test(f)) T_[f] = done;
    add_action(chosen);
    t = std::max(t, done);
  }
  return t;
}

RelaxedPlanResult RelaxSession::run(
    const std::vector<FactId>& goals,
    const std::vector<const NumCondition*>& num_goals,
    const std::vector<ActionId>& reuse, const Bitset* init_override) {
  prime(reuse);
  const Bitset& init = init_override ? *init_override : ctx_->init_facts;
  double t = recurse(goals, num_goals, init);
  return {acts_, t, sentinel_};
}

EvalResult eval_add(const EvalContext& ctx, ActionId a, double t1,
                    double duration) {
  const GroundAction& ga = ctx.task->actions[a];
  RelaxSession session(ctx);
  std::vector<const NumCondition*> numpre;
  for (const auto* conds : {&ga.num_pre_start, &ga.num_pre_over, &ga.num_pre_end})
    for (const NumCondition& c : *conds) numpre.push_back(&c);
  RelaxedPlanResult pre = session.run(ga.pre_list, numpre, {});
  double t2 = std::max(t1, pre.end_time);

  std::vector<FactId> threatened = ctx.threat_facts(a);
  std::vector<ActionId> reuse = pre.acts;
  reuse.push_back(a);
  Bitset init = ctx.init_facts;
  for (FactId f : threatened) init.reset(f);
  RelaxedPlanResult rep = session.run(threatened, {}, reuse, &init);
  return {rep.acts, t2 + duration, rep.sentinel};
}

EvalResult eval_del(const EvalContext& ctx, const std::vector<FactId>& unsup) {
  RelaxSession session(ctx);
  RelaxedPlanResult r = session.run(unsup, {}, {});
  return {r.acts, r.end_time, r.sentinel};
}

EvalResult eval_add(const TAGraph& graph, ActionId a, int level,
                    const ReachabilityTable& local) {
  EvalContext ctx(graph, level, local);
  double dur =
      eval_duration(graph.task(), graph.task().actions[a], ctx.init_values);
  return eval_add(ctx, a, forced_start(graph, a, level), dur);
}

EvalResult eval_del(const TAGraph& graph, int level,
                    const ReachabilityTable& local) {
  EvalContext ctx(graph, level, local);
  std::vector<FactId> goals;
  for (const auto& lf : graph.unsupported_after_removal(level))
    goals.push_back(lf.second);
  std::sort(goals.begin(), goals.end());
  goals.erase(std::unique(goals.begin(), goals.end()), goals.end());
  return eval_del(ctx, goals);
}

double forced_start(const TAGraph& graph, ActionId a, int level) {
  const ActionMutexSet& am = graph.mutex().actions;
  double t = 0.0;
  for (int j = 1; j < level; ++j) {
    ActionId b = graph.action_at(j);
    if (b == kNoAction) continue;
    if (am.mutex(b, a)) t = std::max(t, graph.action_time(j));
  }
  // Supporters of the preconditions already supported here would become
  // causal predecessors of the new action.
  const GroundAction& ga = graph.task().actions[a];
  for (FactId p : ga.pre_list) {
    ActionId s = graph.fact_supporter(level, p);
    if (s >= 0) t = std::max(t, graph.action_time(graph.fact_supporter_level(level, p)));
  }
  return t;
}

EvalTriple make_triple(const EvalContext& ctx, const EvalResult& r,
                       double removed_cost) {
  EvalTriple t;
  t.temporal = r.end_time;
  for (ActionId a : r.acts) {
    if (a == kSentinelAction) {
      t.execution += ctx.sentinel_cost;
      t.search += 1.0 + kSentinelSearchWeight;
    } else {
      t.execution += ctx.task->actions[a].cost;
      t.search += 1.0 + ctx.threats(a);
    }
  }
  t.execution -= removed_cost;
  return t;
}

Weights weights_from_metric(const GroundTask& task) {
  if (!task.metric.present) return {0.5, 0.0};
  return {1.0, task.metric.total_time_coeff};
}

double score(const EvalTriple& t, const ScoreContext& s) {
  double met = s.kappa * (s.w.mu_e * s.max_e + s.w.mu_t * s.max_t);
  if (met < s.eps) met = s.eps;
  double ms = s.max_s < s.eps ? s.eps : s.max_s;
  return s.w.mu_e / met * t.execution + s.w.mu_t / met * t.temporal +
         t.search / ms;
}

}  // namespace tap
