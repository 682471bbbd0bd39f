#include "tap/search.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>

namespace tap {

namespace {

constexpr double kQualityEps = 1e-9;
constexpr double kGapEps = 1e-12;

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

void apply_all_effects(const GroundAction& a, std::vector<double>& v) {
  for (const NumEffect& e : a.num_eff_start) apply_effect(e, v);
  for (const NumEffect& e : a.num_eff_end) apply_effect(e, v);
}

}  // namespace

const NumCondition* numeric_condition(const GroundTask& task,
                                      const Inconsistency& sigma) {
  if (sigma.owner == kEndAction) return &task.num_goals[sigma.num_index];
  const GroundAction& a = task.actions[sigma.owner];
  int idx = sigma.num_index;
  for (const auto* conds : {&a.num_pre_start, &a.num_pre_over, &a.num_pre_end}) {
    if (idx < static_cast<int>(conds->size())) return &(*conds)[idx];
    idx -= static_cast<int>(conds->size());
  }
  return nullptr;
}

std::vector<Mutation> build_neighborhood(const Inconsistency& sigma,
                                         const TAGraph& graph) {
  const GroundTask& task = graph.task();
  std::vector<Mutation> out;
  const int L = sigma.level;
  if (sigma.owner != kEndAction)
    out.push_back({Mutation::Kind::remove, graph.action_at(L), L});

  if (!sigma.numeric) {
    // Landing spot of an insertion at level l: just before the first
    // occupied level >= l (0 when none).  Equal spots give equal action
    // sequences, so each (action, spot) pair contributes once, at the
    // lowest level.
    std::vector<int> spot(L + 2, 0);
    for (int l = std::min(L, graph.levels()); l >= 1; --l)
      spot[l] = graph.action_at(l) != kNoAction ? l : spot[l + 1];
    for (ActionId a : task.achievers[sigma.fact]) {
      int last_spot = -1;
      for (int l = 1; l <= L; ++l) {
        if (!graph.chain_clear(l - 1, L, sigma.fact)) continue;
        if (spot[l] == last_spot) continue;
        last_spot = spot[l];
        out.push_back({Mutation::Kind::insert, a, l});
      }
    }
    return out;
  }

  const NumCondition* c = numeric_condition(task, sigma);
  const std::vector<double>& v = graph.num_values(L);
  double gap = favorable_gap(*c, v, v);
  for (ActionId a = 0; a < static_cast<ActionId>(task.actions.size()); ++a) {
    const GroundAction& ga = task.actions[a];
    if (!ga.num_writes.any()) continue;
    std::vector<double> v2 = v;
    apply_all_effects(ga, v2);
    if (favorable_gap(*c, v2, v2) < gap - kGapEps)
      out.push_back({Mutation::Kind::insert, a, L});
  }
  return out;
}

void NoiseAdapter::observe(int inconsistencies) {
  history_.push_back(inconsistencies);
  if (static_cast<int>(history_.size()) > window_) history_.pop_front();
  if (static_cast<int>(history_.size()) < window_) return;
  double mean = 0.0;
  for (int k : history_) mean += k;
  mean /= history_.size();
  double var = 0.0;
  for (int k : history_) var += (k - mean) * (k - mean);
  var /= history_.size();
  double cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  if (cv < cv_)
    p_ = std::min(1.0, p_ * 1.25);
  else
    p_ = initial_;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "step,restart,sigma_level,sigma_kind,sigma_fact,branch,mutation,"
        "action,level,score,inconsistencies,noise\n";
  for (const TraceRecord& t : trace) {
    os << t.step << ',' << t.restart << ',' << t.level << ','
       << (t.numeric ? "num" : "fact") << ',' << t.fact << ',' << t.branch
       << ',' << t.kind << ',' << t.action << ',' << t.at_level << ',';
    if (t.branch == 'b') os << t.score;
    os << ',' << t.kappa << ',' << t.p << '\n';
  }
}

double plan_quality(const GroundTask& task, const TAGraph& graph) {
  double ms = graph.makespan();
  if (task.metric.present)
    return task.metric.value(graph.num_values(graph.goal_level()), ms);
  double cost = 0.0;
  for (int l = 1; l <= graph.levels(); ++l) {
    ActionId a = graph.action_at(l);
    if (a != kNoAction) cost += task.actions[a].cost;
  }
  return cost;
}

SearchEngine::SearchEngine(const GroundTask& task, const MutexTables& mutex,
                           const ReachabilityTable& base,
                           const SearchConfig& cfg)
    : task_(&task),
      mutex_(&mutex),
      base_(&base),
      cfg_(cfg),
      rng_(cfg.seed),
      w_(weights_from_metric(task)),
      noise_(clamp01(cfg.noise), std::max(1, cfg.noise_window),
             cfg.noise_cv_threshold),
      graph_(task, mutex, base) {
  cfg_.max_steps = std::max(1, cfg_.max_steps);
  cfg_.max_restarts = std::max(1, cfg_.max_restarts);
  cfg_.restart_growth = std::max(1.0, cfg_.restart_growth);
  cfg_.noise = clamp01(cfg_.noise);
  if (!(cfg_.removal_fraction > 0.0)) cfg_.removal_fraction = 0.05;
}

double SearchEngine::elapsed() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
      .count();
}

EvalContext& SearchEngine::ctx_at(int level) {
  auto it = cache_.find(level);
  if (it == cache_.end()) {
    ReachabilityTable local = refresh_reachability(
        *task_, *base_, graph_.state(level), graph_.num_values(level));
    it = cache_.emplace(level, EvalContext(graph_, level, local)).first;
  }
  return it->second;
}

int SearchEngine::sideways_delta(const Mutation& m,
                                 const std::vector<Inconsistency>& incs) {
  if (m.kind == Mutation::Kind::remove) {
    int own = 0;
    for (const Inconsistency& i : incs)
      if (i.level == m.level) ++own;
    int created =
        static_cast<int>(graph_.unsupported_after_removal(m.level).size());
    return created - own;
  }
  const GroundAction& ga = task_->actions[m.action];
  int unsup = 0;
  const Bitset& sup = graph_.supported(m.level);
  for (FactId p : ga.pre_list)
    if (!sup.test(p)) ++unsup;
  const std::vector<double>& v = graph_.num_values(m.level);
  std::vector<double> after_start;
  for (const auto* conds : {&ga.num_pre_start, &ga.num_pre_over, &ga.num_pre_end}) {
    bool at_end = conds == &ga.num_pre_end;
    for (const NumCondition& c : *conds) {
      const std::vector<double>* vals = &v;
      if (at_end && !ga.num_eff_start.empty()) {
        if (after_start.empty()) {
          after_start = v;
          for (const NumEffect& e : ga.num_eff_start)
            apply_effect(e, after_start);
        }
        vals = &after_start;
      }
      if (!holds(c, *vals)) ++unsup;
    }
  }
  return unsup + ctx_at(m.level).threats(m.action) - 1;
}

EvalTriple SearchEngine::candidate_triple(const Mutation& m) {
  EvalContext& ctx = ctx_at(m.level);
  if (m.kind == Mutation::Kind::insert) {
    double dur =
        eval_duration(*task_, task_->actions[m.action], ctx.init_values);
    EvalResult r =
        eval_add(ctx, m.action, forced_start(graph_, m.action, m.level), dur);
    return make_triple(ctx, r, 0.0);
  }
  std::vector<FactId> unsup;
  for (const auto& lf : graph_.unsupported_after_removal(m.level))
    unsup.push_back(lf.second);
  std::sort(unsup.begin(), unsup.end());
  unsup.erase(std::unique(unsup.begin(), unsup.end()), unsup.end());
  EvalResult r = eval_del(ctx, unsup);
  return make_triple(ctx, r, task_->actions[m.action].cost);
}

void SearchEngine::apply(const Mutation& m) {
  if (m.kind == Mutation::Kind::insert)
    graph_.insert_action(m.action, m.level);
  else
    graph_.remove_action(m.level, cfg_.induced_pruning);
}

SearchEngine::StepResult SearchEngine::step() {
  cache_.clear();
  std::vector<Inconsistency> incs = graph_.inconsistencies();
  if (incs.empty()) return StepResult::solution;

  const int kappa = static_cast<int>(incs.size());
  noise_.observe(kappa);
  const Inconsistency& sigma = incs.front();

  TraceRecord tr;
  tr.step = steps_total_ + 1;
  tr.restart = restart_;
  tr.level = sigma.level;
  tr.numeric = sigma.numeric;
  tr.fact = sigma.fact;
  tr.kappa = kappa;
  tr.p = noise_.p();

  std::vector<Mutation> cands = build_neighborhood(sigma, graph_);
  if (cands.empty()) {
    std::vector<int> occupied;
    for (int l = 1; l <= graph_.levels(); ++l)
      if (graph_.action_at(l) != kNoAction) occupied.push_back(l);
    tr.branch = 'f';
    if (!occupied.empty()) {
      int l = occupied[rng_.below(static_cast<int>(occupied.size()))];
      tr.kind = 'r';
      tr.action = graph_.action_at(l);
      tr.at_level = l;
      graph_.remove_action(l, cfg_.induced_pruning);
    }
  } else {
    int pick = -1;
    std::vector<int> sideways;
    for (int i = 0; i < static_cast<int>(cands.size()); ++i)
      if (sideways_delta(cands[i], incs) <= 0) sideways.push_back(i);
    if (!sideways.empty()) {
      pick = sideways[rng_.below(static_cast<int>(sideways.size()))];
      tr.branch = 's';
    } else if (rng_.unit() < noise_.p()) {
      pick = rng_.below(static_cast<int>(cands.size()));
      tr.branch = 'n';
    } else {
      std::vector<EvalTriple> triples;
      triples.reserve(cands.size());
      ScoreContext sc;
      sc.w = w_;
      sc.kappa = kappa;
      for (const Mutation& m : cands) {
        triples.push_back(candidate_triple(m));
        sc.max_e = std::max(sc.max_e, triples.back().execution);
        sc.max_t = std::max(sc.max_t, triples.back().temporal);
        sc.max_s = std::max(sc.max_s, triples.back().search);
      }
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(triples.size()); ++i) {
        double s = score(triples[i], sc);
        if (s < best) {
          best = s;
          pick = i;
        }
      }
      tr.branch = 'b';
      tr.score = best;
    }
    const Mutation& m = cands[pick];
    tr.kind = m.kind == Mutation::Kind::insert ? 'i' : 'r';
    tr.action = m.action;
    tr.at_level = m.level;
    apply(m);
  }
  if (cfg_.record_trace) out_.trace.push_back(tr);
  return StepResult::moved;
}

void SearchEngine::perturb() {
  cache_.clear();
  struct Entry {
    int level;
    double weight;
  };
  std::vector<Entry> pool;
  for (int l = 1; l <= graph_.levels(); ++l) {
    ActionId a = graph_.action_at(l);
    if (a == kNoAction) continue;
    double w = w_.mu_e > w_.mu_t ? task_->actions[a].cost : graph_.duration_at(l);
    pool.push_back({l, std::max(w, 1e-9)});
  }
  if (pool.empty()) return;
  int want = std::max(
      1, static_cast<int>(
             std::ceil(cfg_.removal_fraction * static_cast<double>(pool.size()))));
  want = std::min(want, static_cast<int>(pool.size()));

  std::vector<int> chosen;
  for (int k = 0; k < want; ++k) {
    double total = 0.0;
    for (const Entry& e : pool) total += e.weight;
    double x = rng_.unit() * total;
    int idx = 0;
    for (; idx + 1 < static_cast<int>(pool.size()); ++idx) {
      x -= pool[idx].weight;
      if (x < 0.0) break;
    }
    chosen.push_back(pool[idx].level);
    pool.erase(pool.begin() + idx);
  }

  // Also drop the actions consuming a chosen action's designated support.
  std::vector<int> goners = chosen;
  for (const CausalLink& cl : graph_.causal_links())
    for (int l : chosen)
      if (cl.from_level == l && cl.consumer >= 0) goners.push_back(cl.to_level);
  std::sort(goners.begin(), goners.end(), std::greater<int>());
  goners.erase(std::unique(goners.begin(), goners.end()), goners.end());
  for (int l : goners)
    if (l <= graph_.levels() && graph_.action_at(l) != kNoAction)
      graph_.remove_action(l, cfg_.induced_pruning);
}

void SearchEngine::reinit() {
  cache_.clear();
  if (!have_solution_) {
    graph_.init_empty();
    return;
  }
  graph_.init_from_plan(best_sequence_);
  perturb();
}

void SearchEngine::emit_record() {
  SolutionRecord rec;
  for (int l = 1; l <= graph_.levels(); ++l) {
    ActionId a = graph_.action_at(l);
    if (a == kNoAction) continue;
    rec.steps.push_back({a, graph_.action_start(l), graph_.duration_at(l)});
  }
  std::stable_sort(rec.steps.begin(), rec.steps.end(),
                   [](const ScheduledStep& x, const ScheduledStep& y) {
                     return x.start < y.start;
                   });
  rec.makespan = graph_.makespan();
  rec.metric = plan_quality(*task_, graph_);
  rec.found_at = elapsed();
  rec.steps_used = steps_total_;
  rec.restarts_used = restart_;
  out_.records.push_back(rec);
  best_quality_ = rec.metric;
  best_sequence_ = graph_.action_sequence();
  have_solution_ = true;
  if (cfg_.verbosity >= 1)
    std::cerr << "solution " << out_.records.size() << ": metric "
              << rec.metric << ", makespan " << rec.makespan << ", "
              << rec.steps.size() << " actions, step " << rec.steps_used
              << "\n";
}

const SearchOutcome& SearchEngine::run() {
  out_ = SearchOutcome{};
  steps_total_ = 0;
  restart_ = 1;
  have_solution_ = false;
  t0_ = std::chrono::steady_clock::now();
  graph_.init_empty();
  cache_.clear();

  double budget = cfg_.max_steps;
  int steps_in_search = 0;
  for (;;) {
    if (elapsed() > cfg_.cpu_budget) break;
    StepResult r = step();
    ++steps_total_;
    ++steps_in_search;
    if (r == StepResult::solution) {
      double q = plan_quality(*task_, graph_);
      if (!have_solution_ || q < best_quality_ - kQualityEps) emit_record();
      if (cfg_.record_trace) {
        TraceRecord tr;
        tr.step = steps_total_;
        tr.restart = restart_;
        tr.branch = 'S';
        tr.kappa = 0;
        tr.p = noise_.p();
        out_.trace.push_back(tr);
      }
      if (cfg_.mode == SearchConfig::Mode::first_solution) break;
      if (cfg_.stop_after_solutions > 0 &&
          static_cast<int>(out_.records.size()) >= cfg_.stop_after_solutions)
        break;
      perturb();
      steps_in_search = 0;
      budget = cfg_.max_steps;
      continue;
    }
    if (steps_in_search >= static_cast<int>(budget)) {
      if (restart_ >= cfg_.max_restarts) break;
      ++restart_;
      budget *= cfg_.restart_growth;
      steps_in_search = 0;
      if (cfg_.verbosity >= 1)
        std::cerr << "restart " << restart_ << ", step budget "
                  << static_cast<int>(budget) << "\n";
      reinit();
    }
  }
  out_.solved = have_solution_;
  out_.steps = steps_total_;
  out_.restarts = restart_;
  return out_;
}

SearchOutcome run_search(const GroundTask& task, const MutexTables& mutex,
                         const ReachabilityTable& base,
                         const SearchConfig& cfg) {
  SearchEngine engine(task, mutex, base, cfg);
  return engine.run();
}

}  // namespace tap
