#include "tap/ground.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace tap {

double eval_expr(const GExpr& e, const std::vector<double>& values) {
  switch (e.op) {
    case GExpr::Op::number: return e.value;
    case GExpr::Op::var: return values[e.var];
    case GExpr::Op::add: {
      double s = 0;
      for (const auto& k : e.kids) s += eval_expr(k, values);
      return s;
    }
    case GExpr::Op::sub:
      return eval_expr(e.kids[0], values) - eval_expr(e.kids[1], values);
    case GExpr::Op::mul: {
      double s = 1;
      for (const auto& k : e.kids) s *= eval_expr(k, values);
      return s;
    }
    case GExpr::Op::div: {
      double d = eval_expr(e.kids[1], values);
      if (d == 0.0)
        throw InputError(ErrorKind::semantic, "division by zero in expression");
      return eval_expr(e.kids[0], values) / d;
    }
    case GExpr::Op::neg: return -eval_expr(e.kids[0], values);
  }
  return 0;
}

void collect_vars(const GExpr& e, Bitset& out) {
  if (e.op == GExpr::Op::var) out.set(e.var);
  for (const auto& k : e.kids) collect_vars(k, out);
}

bool holds(const NumCondition& c, const std::vector<double>& values,
           double eq_tolerance) {
  double l = eval_expr(c.lhs, values);
  double r = eval_expr(c.rhs, values);
  switch (c.rel) {
    case Rel::lt: return l < r;
    case Rel::le: return l <= r;
    case Rel::eq: return std::fabs(l - r) <= eq_tolerance;
    case Rel::ge: return l >= r;
    case Rel::gt: return l > r;
  }
  return false;
}

void apply_effect(const NumEffect& e, std::vector<double>& values) {
  double v = eval_expr(e.value, values);
  switch (e.op) {
    case AssignOp::assign: values[e.var] = v; break;
    case AssignOp::increase: values[e.var] += v; break;
    case AssignOp::decrease: values[e.var] -= v; break;
    case AssignOp::scale_up: values[e.var] *= v; break;
    case AssignOp::scale_down:
      if (v == 0.0)
        throw InputError(ErrorKind::semantic, "scale-down by zero");
      values[e.var] /= v;
      break;
  }
}

double LinearMetric::value(const std::vector<double>& fluents,
                           double makespan) const {
  double v = constant + total_time_coeff * makespan;
  for (const auto& [var, coeff] : terms) v += coeff * fluents[var];
  return v;
}

void GroundTask::rebuild_achievers() {
  achievers.assign(fact_names.size(), {});
  for (ActionId a = 0; a < action_count(); ++a)
    for (FactId f : actions[a].add_list) achievers[f].push_back(a);
}

namespace {

// ------------------------------------------------------------------ helpers

struct ObjectTable {
  std::vector<std::string> names;
  std::vector<int> types;
  std::unordered_map<std::string, int> index;

  void add(const std::string& name, int type) {
    if (index.count(name))
      throw InputError(ErrorKind::semantic, "duplicate object " + name);
    index[name] = static_cast<int>(names.size());
    names.push_back(name);
    types.push_back(type);
  }
};

std::string render_atom(const std::string& head,
                        const std::vector<std::string>& args) {
  std::string s = "(" + head;
  for (const auto& a : args) s += " " + a;
  s += ")";
  return s;
}

class Grounder {
 public:
  Grounder(const Domain& d, const Problem& p, const GroundConfig& cfg)
      : d_(d), p_(p), cfg_(cfg) {}

  GroundTask run() {
    task_.domain_name = d_.name;
    task_.problem_name = p_.name;
    task_.zero_cost_eps = cfg_.zero_cost_eps;

    build_objects();
    find_static_predicates();
    find_complemented_predicates();
    index_init();

    for (std::size_t s = 0; s < d_.schemes.size(); ++s) instantiate(static_cast<int>(s));

    ground_goals();
    ground_metric();
    finalize();
    return std::move(task_);
  }

 private:
  const Domain& d_;
  const Problem& p_;
  const GroundConfig& cfg_;
  GroundTask task_;

  ObjectTable objects_;
  std::vector<bool> static_pred_;       // per domain predicate
  std::vector<bool> complemented_;      // predicate appears negated somewhere
  std::set<std::string> init_atoms_;    // raw init fact names (incl. statics)
  std::unordered_map<std::string, FactId> fact_index_;
  std::unordered_map<std::string, VarId> fluent_index_;
  std::map<FactId, std::string> complement_partner_;  // not-fact -> base name
  std::map<std::string, double> init_value_by_name_;

  void build_objects() {
    for (const auto& [name, type] : d_.constants) objects_.add(name, type);
    for (const auto& [name, type] : p_.objects) objects_.add(name, type);
  }

  void find_static_predicates() {
    static_pred_.assign(d_.predicates.size(), true);
    for (const auto& sc : d_.schemes)
      for (const auto& [tag, lit] : sc.effects) static_pred_[lit.atom.pred] = false;
  }

  void find_complemented_predicates() {
    complemented_.assign(d_.predicates.size(), false);
    for (const auto& sc : d_.schemes)
      for (const auto& [tag, lit] : sc.conds)
        if (!lit.positive) complemented_[lit.atom.pred] = true;
    for (const auto& lit : p_.goal_literals)
      if (!lit.positive) complemented_[lit.atom.pred] = true;
  }

  void index_init() {
    for (const auto& atom : p_.init_facts) {
      std::vector<std::string> args;
      for (const auto& t : atom.args) args.push_back(resolve_constant(t));
      check_atom_types(atom, args);
      init_atoms_.insert(render_atom(d_.predicates[atom.pred].name, args));
    }
    for (const auto& [ref, value] : p_.init_values) {
      std::vector<std::string> args;
      for (const auto& t : ref.args) args.push_back(resolve_constant(t));
      init_value_by_name_[render_atom(d_.functions[ref.func].name, args)] = value;
    }
  }

  std::string resolve_constant(const Term& t) {
    if (t.is_param)
      throw InputError(ErrorKind::semantic, "free variable in ground context");
    if (!objects_.index.count(t.name))
      throw InputError(ErrorKind::undeclared, "undeclared object " + t.name);
    return t.name;
  }

  void check_atom_types(const Atom& atom, const std::vector<std::string>& args) {
    const auto& sig = d_.predicates[atom.pred];
    for (std::size_t i = 0; i < args.size(); ++i) {
      int ot = objects_.types[objects_.index.at(args[i])];
      if (!d_.type_is_a(ot, sig.param_types[i]))
        throw InputError(ErrorKind::semantic,
                         "object " + args[i] + " has the wrong type for " +
                             sig.name);
    }
  }

  FactId intern_fact(const std::string& name) {
    auto it = fact_index_.find(name);
    if (it != fact_index_.end()) return it->second;
    FactId id = static_cast<FactId>(task_.fact_names.size());
    fact_index_[name] = id;
    task_.fact_names.push_back(name);
    return id;
  }

  VarId intern_fluent(const std::string& name) {
    auto it = fluent_index_.find(name);
    if (it != fluent_index_.end()) return it->second;
    VarId id = static_cast<VarId>(task_.fluent_names.size());
    fluent_index_[name] = id;
    task_.fluent_names.push_back(name);
    return id;
  }

  FactId intern_complement(const std::string& pred_name,
                           const std::vector<std::string>& args) {
    std::string base = render_atom(pred_name, args);
    FactId id = intern_fact(render_atom("not-" + pred_name, args));
    complement_partner_.emplace(id, base);
    return id;
  }

  // ------------------------------------------------------------ instancing

  std::string subst(const Term& t, const std::vector<int>& binding) {
    if (t.is_param) return objects_.names[binding[t.param]];
    if (!objects_.index.count(t.name))
      throw InputError(ErrorKind::undeclared, "undeclared object " + t.name);
    return t.name;
  }

  std::vector<std::string> subst_args(const std::vector<Term>& terms,
                                      const std::vector<int>& binding) {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(subst(t, binding));
    return out;
  }

  GExpr ground_expr(const Expr& e, const std::vector<int>& binding) {
    GExpr g;
    switch (e.op) {
      case Expr::Op::number: return GExpr::number(e.value);
      case Expr::Op::total_time:
        throw InputError(ErrorKind::unsupported,
                         "(total-time) outside the metric");
      case Expr::Op::fluent: {
        auto args = subst_args(e.fluent.args, binding);
        return GExpr::variable(intern_fluent(
            render_atom(d_.functions[e.fluent.func].name, args)));
      }
      case Expr::Op::add: g.op = GExpr::Op::add; break;
      case Expr::Op::sub: g.op = GExpr::Op::sub; break;
      case Expr::Op::mul: g.op = GExpr::Op::mul; break;
      case Expr::Op::div: g.op = GExpr::Op::div; break;
      case Expr::Op::neg: g.op = GExpr::Op::neg; break;
    }
    for (const auto& k : e.kids) g.kids.push_back(ground_expr(k, binding));
    return g;
  }

  void instantiate(int scheme_index) {
    const Scheme& sc = d_.schemes[scheme_index];
    std::vector<std::vector<int>> candidates(sc.param_names.size());
    for (std::size_t p = 0; p < sc.param_names.size(); ++p) {
      for (std::size_t o = 0; o < objects_.names.size(); ++o)
        if (d_.type_is_a(objects_.types[o], sc.param_types[p]))
          candidates[p].push_back(static_cast<int>(o));
      if (candidates[p].empty()) return;  // no object of this type
    }

    std::vector<int> binding(sc.param_names.size(), 0);
    std::vector<std::size_t> odo(sc.param_names.size(), 0);
    while (true) {
      for (std::size_t p = 0; p < odo.size(); ++p)
        binding[p] = candidates[p][odo[p]];
      make_instance(sc, binding);

      std::size_t p = 0;
      for (; p < odo.size(); ++p) {
        if (++odo[p] < candidates[p].size()) break;
        odo[p] = 0;
      }
      if (p == odo.size()) break;  // odometer wrapped (or no parameters)
    }
  }

  void make_instance(const Scheme& sc, const std::vector<int>& binding) {
    GroundAction a;
    a.name = sc.name;
    for (int obj : binding) a.name += " " + objects_.names[obj];

    // Static preconditions decide the instance's fate before anything is
    // interned for it.
    for (const auto& [tag, lit] : sc.conds) {
      if (!static_pred_[lit.atom.pred]) continue;
      auto args = subst_args(lit.atom.args, binding);
      bool truth = init_atoms_.count(
                       render_atom(d_.predicates[lit.atom.pred].name, args)) > 0;
      if (lit.positive != truth) return;  // statically false: drop instance
    }

    for (const auto& [tag, lit] : sc.conds) {
      if (static_pred_[lit.atom.pred]) continue;  // statically true: compiled out
      auto args = subst_args(lit.atom.args, binding);
      const std::string& pn = d_.predicates[lit.atom.pred].name;
      FactId f = lit.positive ? intern_fact(render_atom(pn, args))
                              : intern_complement(pn, args);
      cond_list(a, tag).push_back(f);
    }

    for (const auto& [tag, lit] : sc.effects) {
      auto args = subst_args(lit.atom.args, binding);
      const std::string& pn = d_.predicates[lit.atom.pred].name;
      FactId f = intern_fact(render_atom(pn, args));
      if (lit.positive) {
        eff_add_list(a, tag).push_back(f);
        if (complemented_[lit.atom.pred])
          eff_del_list(a, tag).push_back(intern_complement(pn, args));
      } else {
        eff_del_list(a, tag).push_back(f);
        if (complemented_[lit.atom.pred])
          eff_add_list(a, tag).push_back(intern_complement(pn, args));
      }
    }

    for (const auto& [tag, cmp] : sc.num_conds) {
      NumCondition c;
      c.rel = cmp.rel;
      c.lhs = ground_expr(cmp.lhs, binding);
      c.rhs = ground_expr(cmp.rhs, binding);
      num_cond_list(a, tag).push_back(std::move(c));
    }

    for (const auto& [tag, eff] : sc.num_effects) {
      NumEffect e;
      e.op = eff.op;
      auto args = subst_args(eff.target.args, binding);
      e.var = intern_fluent(
          render_atom(d_.functions[eff.target.func].name, args));
      e.value = ground_expr(eff.value, binding);
      (tag == CondTag::at_start ? a.num_eff_start : a.num_eff_end)
          .push_back(std::move(e));
    }

    a.duration = ground_expr(sc.duration, binding);

    task_.actions.push_back(std::move(a));
    if (task_.actions.size() > cfg_.max_actions)
      throw InputError(ErrorKind::resource,
                       "grounding explosion: more than " +
                           std::to_string(cfg_.max_actions) + " instances");
  }

  static std::vector<FactId>& cond_list(GroundAction& a, CondTag tag) {
    switch (tag) {
      case CondTag::at_start: return a.pre_start;
      case CondTag::over_all: return a.pre_over;
      case CondTag::at_end: return a.pre_end;
    }
    return a.pre_over;
  }
  static std::vector<FactId>& eff_add_list(GroundAction& a, CondTag tag) {
    return tag == CondTag::at_start ? a.add_start : a.add_end;
  }
  static std::vector<FactId>& eff_del_list(GroundAction& a, CondTag tag) {
    return tag == CondTag::at_start ? a.del_start : a.del_end;
  }
  static std::vector<NumCondition>& num_cond_list(GroundAction& a, CondTag tag) {
    switch (tag) {
      case CondTag::at_start: return a.num_pre_start;
      case CondTag::over_all: return a.num_pre_over;
      case CondTag::at_end: return a.num_pre_end;
    }
    return a.num_pre_over;
  }

  // ---------------------------------------------------------------- goals

  void ground_goals() {
    std::vector<int> no_binding;
    std::set<FactId> seen;
    for (const auto& lit : p_.goal_literals) {
      auto args = subst_args(lit.atom.args, no_binding);
      check_atom_types(lit.atom, args);
      const std::string& pn = d_.predicates[lit.atom.pred].name;
      if (static_pred_[lit.atom.pred]) {
        bool truth = init_atoms_.count(render_atom(pn, args)) > 0;
        if (lit.positive == truth) continue;  // statically satisfied
        // Statically false goal: keep an unreachable fact so the planner
        // reports the task unsolvable instead of silently dropping it.
      }
      FactId f = lit.positive ? intern_fact(render_atom(pn, args))
                              : intern_complement(pn, args);
      if (seen.insert(f).second) task_.goals.push_back(f);
    }
    for (const auto& cmp : p_.goal_comparisons) {
      NumCondition c;
      c.rel = cmp.rel;
      c.lhs = ground_expr(cmp.lhs, no_binding);
      c.rhs = ground_expr(cmp.rhs, no_binding);
      task_.num_goals.push_back(std::move(c));
    }
  }

  // ---------------------------------------------------------------- metric

  struct LinAcc {
    double constant = 0, tt = 0;
    std::map<VarId, double> terms;
    bool is_constant() const { return tt == 0 && terms.empty(); }
  };

  LinAcc linearize(const Expr& e, double scale) {
    LinAcc acc;
    switch (e.op) {
      case Expr::Op::number: acc.constant = scale * e.value; return acc;
      case Expr::Op::total_time: acc.tt = scale; return acc;
      case Expr::Op::fluent: {
        std::vector<int> no_binding;
        auto args = subst_args(e.fluent.args, no_binding);
        VarId v = intern_fluent(
            render_atom(d_.functions[e.fluent.func].name, args));
        acc.terms[v] = scale;
        return acc;
      }
      case Expr::Op::add:
        for (const auto& k : e.kids) merge(acc, linearize(k, scale));
        return acc;
      case Expr::Op::sub:
        merge(acc, linearize(e.kids[0], scale));
        merge(acc, linearize(e.kids[1], -scale));
        return acc;
      case Expr::Op::neg:
        merge(acc, linearize(e.kids[0], -scale));
        return acc;
      case Expr::Op::mul: {
        // One factor must be numerically constant.
        double c = 1;
        int non_const = -1;
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
          LinAcc k = linearize(e.kids[i], 1);
          if (k.is_constant()) {
            c *= k.constant;
          } else if (non_const < 0) {
            non_const = static_cast<int>(i);
          } else {
            throw InputError(ErrorKind::unsupported,
                             "metric must be linear in the fluents");
          }
        }
        if (non_const < 0) {
          acc.constant = scale * c;
          return acc;
        }
        return linearize(e.kids[non_const], scale * c);
      }
      case Expr::Op::div: {
        LinAcc rhs = linearize(e.kids[1], 1);
        if (!rhs.is_constant() || rhs.constant == 0)
          throw InputError(ErrorKind::unsupported,
                           "metric must be linear in the fluents");
        return linearize(e.kids[0], scale / rhs.constant);
      }
    }
    return acc;
  }

  static void merge(LinAcc& into, const LinAcc& from) {
    into.constant += from.constant;
    into.tt += from.tt;
    for (const auto& [v, c] : from.terms) into.terms[v] += c;
  }

  void ground_metric() {
    if (!p_.has_metric) return;
    LinAcc acc = linearize(p_.metric, 1);
    task_.metric.present = true;
    task_.metric.constant = acc.constant;
    task_.metric.total_time_coeff = acc.tt;
    for (const auto& [v, c] : acc.terms)
      if (c != 0) task_.metric.terms.emplace_back(v, c);
  }

  // -------------------------------------------------------------- finalize

  void finalize() {
    // Facts of dynamic predicates listed in :init but never mentioned by any
    // action or goal still belong to the state, so intern them first.
    for (const auto& atom : p_.init_facts) {
      if (static_pred_[atom.pred]) continue;
      std::vector<std::string> args;
      for (const auto& t : atom.args) args.push_back(t.name);
      intern_fact(render_atom(d_.predicates[atom.pred].name, args));
    }

    const int nf = task_.fact_count();
    const int nv = task_.fluent_count();

    task_.init = Bitset(nf);
    for (const auto& name : init_atoms_) {
      auto it = fact_index_.find(name);
      if (it != fact_index_.end()) task_.init.set(it->second);
    }
    // Complements hold exactly where the base fact is initially absent.
    for (const auto& [f, base] : complement_partner_)
      if (!init_atoms_.count(base)) task_.init.set(f);

    task_.complement_pairs.clear();
    for (const auto& [f, base] : complement_partner_) {
      auto it = fact_index_.find(base);
      if (it != fact_index_.end())
        task_.complement_pairs.emplace_back(it->second, f);
    }

    // Fluent initial values; absent ones default to 0 with a warning.
    task_.init_values.assign(static_cast<std::size_t>(nv), 0.0);
    std::set<std::string> assigned;
    for (const auto& [name, value] : init_value_by_name_) {
      auto it = fluent_index_.find(name);
      if (it != fluent_index_.end()) {
        task_.init_values[it->second] = value;
        assigned.insert(name);
      }
    }
    for (VarId v = 0; v < task_.fluent_count(); ++v)
      if (!assigned.count(task_.fluent_names[v]))
        task_.warnings.push_back("fluent " + task_.fluent_names[v] +
                                 " has no :init value; defaulting to 0");

    for (auto& a : task_.actions) finalize_action(a);
    task_.rebuild_achievers();
  }

  void finalize_action(GroundAction& a) {
    const int nf = task_.fact_count();
    const int nv = task_.fluent_count();

    auto dedup = [](std::vector<FactId>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto* v : {&a.pre_start, &a.pre_over, &a.pre_end, &a.add_start,
                    &a.add_end, &a.del_start, &a.del_end})
      dedup(*v);

    a.pre = Bitset(nf);
    a.add = Bitset(nf);
    a.del = Bitset(nf);
    for (const auto* v : {&a.pre_start, &a.pre_over, &a.pre_end})
      for (FactId f : *v) a.pre.set(f);
    // Untagged projections are the net effect of replaying the start phase
    // and then the end phase; a fact added at start but deleted at end is a
    // net delete, and within a phase an add beats a delete of the same fact.
    Bitset as(nf), ae(nf), ds(nf), de(nf);
    for (FactId f : a.add_start) as.set(f);
    for (FactId f : a.add_end) ae.set(f);
    for (FactId f : a.del_start) ds.set(f);
    for (FactId f : a.del_end) de.set(f);
    a.add = as;
    a.add.and_not(de);
    a.add |= ae;
    a.del = ds;
    a.del.and_not(ae);
    a.del |= de;
    a.del.and_not(a.add);

    a.pre_list = a.pre.to_vector();
    a.add_list = a.add.to_vector();
    a.del_list = a.del.to_vector();

    a.num_reads = Bitset(nv);
    a.num_writes = Bitset(nv);
    a.num_writes_noncommuting = Bitset(nv);
    for (const auto* conds : {&a.num_pre_start, &a.num_pre_over, &a.num_pre_end})
      for (const auto& c : *conds) {
        collect_vars(c.lhs, a.num_reads);
        collect_vars(c.rhs, a.num_reads);
      }
    collect_vars(a.duration, a.num_reads);
    for (const auto* effs : {&a.num_eff_start, &a.num_eff_end})
      for (const auto& e : *effs) {
        a.num_writes.set(e.var);
        if (e.op != AssignOp::increase && e.op != AssignOp::decrease)
          a.num_writes_noncommuting.set(e.var);
      }

    Bitset dvars(nv);
    collect_vars(a.duration, dvars);
    a.constant_duration = !dvars.any();
    if (a.constant_duration) {
      a.duration_value = eval_expr(a.duration, task_.init_values);
      if (!(a.duration_value > 0) || !std::isfinite(a.duration_value))
        throw InputError(ErrorKind::semantic,
                         "action " + a.name + " has non-positive duration");
    }

    a.cost = action_cost(task_, a);
  }
};

}  // namespace

GroundTask ground(const Domain& domain, const Problem& problem,
                  const GroundConfig& config) {
  return Grounder(domain, problem, config).run();
}

double action_cost(const GroundTask& task, const GroundAction& action) {
  if (!task.metric.present) return 1.0;
  std::vector<double> after = task.init_values;
  for (const auto& e : action.num_eff_start) apply_effect(e, after);
  for (const auto& e : action.num_eff_end) apply_effect(e, after);
  // Total-time term zeroed on both sides: only fluent changes count.
  double before_m = task.metric.value(task.init_values, 0.0);
  double after_m = task.metric.value(after, 0.0);
  double delta = after_m - before_m;
  if (delta <= 0) return task.zero_cost_eps;
  return delta;
}

double eval_duration(const GroundTask&, const GroundAction& action,
                     const std::vector<double>& values) {
  if (action.constant_duration) return action.duration_value;
  double d = eval_expr(action.duration, values);
  if (!(d > 0) || !std::isfinite(d))
    throw InputError(ErrorKind::semantic,
                     "action " + action.name + " has non-positive duration");
  return d;
}

}  // namespace tap
