#include "tap/plan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

namespace tap {

namespace {

constexpr double kTol = 1e-9;

double steps_makespan(const std::vector<PlanStep>& steps) {
  double m = 0.0;
  for (const PlanStep& s : steps) m = std::max(m, s.start + s.duration);
  return m;
}

void sort_steps(std::vector<PlanStep>& steps, const GroundTask& task) {
  std::stable_sort(steps.begin(), steps.end(),
                   [&](const PlanStep& x, const PlanStep& y) {
                     if (x.start != y.start) return x.start < y.start;
                     return task.actions[x.action].name <
                            task.actions[y.action].name;
                   });
}

struct Violation {
  double time;
  ActionId action;
  std::string text;
};

// Start/end points in time order; ends sort first so that an action
// starting exactly when another ends sees its effects.
struct Event {
  double t;
  int kind;  // 0 = end, 1 = start
  int idx;
};

std::vector<Event> make_events(const std::vector<PlanStep>& steps) {
  std::vector<Event> evs;
  evs.reserve(steps.size() * 2);
  for (int i = 0; i < static_cast<int>(steps.size()); ++i) {
    evs.push_back({steps[i].start, 1, i});
    evs.push_back({steps[i].start + steps[i].duration, 0, i});
  }
  std::sort(evs.begin(), evs.end(), [](const Event& x, const Event& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.kind != y.kind) return x.kind < y.kind;
    return x.idx < y.idx;
  });
  return evs;
}

}  // namespace

PlanSolution extract_plan(const TAGraph& graph) {
  if (!graph.is_solution())
    throw std::logic_error("extract_plan: graph still has inconsistencies");
  const GroundTask& task = graph.task();
  PlanSolution plan;
  for (int l = 1; l <= graph.levels(); ++l) {
    ActionId a = graph.action_at(l);
    if (a == kNoAction) continue;
    plan.steps.push_back({a, graph.action_start(l), graph.duration_at(l), l});
  }
  sort_steps(plan.steps, task);
  plan.makespan = graph.makespan();
  plan.metric =
      task.metric.present
          ? task.metric.value(graph.num_values(graph.goal_level()),
                              plan.makespan)
          : static_cast<double>(plan.steps.size());
  plan.certificate = graph.ordering_constraints();
  return plan;
}

ValidationReport validate(const GroundTask& task, const MutexTables& mutex,
                          const PlanSolution& plan) {
  for (const PlanStep& s : plan.steps)
    if (s.action < 0 || s.action >= task.action_count())
      throw InputError(ErrorKind::semantic,
                       "plan refers to an unknown action id");

  ValidationReport rep;
  rep.makespan = steps_makespan(plan.steps);
  std::vector<Violation> viols;

  // Structural separation of mutex actions: one must end (within tolerance)
  // before the other starts.
  const auto& steps = plan.steps;
  for (int i = 0; i < static_cast<int>(steps.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(steps.size()); ++j) {
      if (!mutex.actions.mutex(steps[i].action, steps[j].action)) continue;
      double ei = steps[i].start + steps[i].duration;
      double ej = steps[j].start + steps[j].duration;
      if (ei <= steps[j].start + kTol || ej <= steps[i].start + kTol) continue;
      viols.push_back({std::max(steps[i].start, steps[j].start),
                       steps[i].action,
                       "mutex actions overlap: (" +
                           task.actions[steps[i].action].name + ") and (" +
                           task.actions[steps[j].action].name + ")"});
    }

  Bitset state = task.init;
  std::vector<double> values = task.init_values;

  auto check_bool = [&](const std::vector<FactId>& pre, ActionId a, double t,
                        const char* tag) {
    for (FactId f : pre)
      if (!state.test(f))
        viols.push_back({t, a,
                         std::string(tag) + " precondition " +
                             task.fact_names[f] + " of (" +
                             task.actions[a].name + ") unmet"});
  };
  auto check_num = [&](const std::vector<NumCondition>& pre, ActionId a,
                       double t, const char* tag) {
    for (const NumCondition& c : pre)
      if (!holds(c, values))
        viols.push_back({t, a,
                         std::string(tag) + " numeric precondition of (" +
                             task.actions[a].name + ") unmet"});
  };

  std::vector<Event> evs = make_events(steps);
  std::size_t k = 0;
  while (k < evs.size()) {
    double t = evs[k].t;
    std::size_t m = k;
    while (m < evs.size() && evs[m].t <= t + kTol) ++m;

    // At-end conditions against the state before this time point.
    for (std::size_t e = k; e < m; ++e) {
      if (evs[e].kind != 0) continue;
      const GroundAction& a = task.actions[steps[evs[e].idx].action];
      check_bool(a.pre_end, steps[evs[e].idx].action, t, "at-end");
      check_num(a.num_pre_end, steps[evs[e].idx].action, t, "at-end");
    }
    for (std::size_t e = k; e < m; ++e) {
      if (evs[e].kind != 0) continue;
      const GroundAction& a = task.actions[steps[evs[e].idx].action];
      for (FactId f : a.del_end) state.reset(f);
      for (FactId f : a.add_end) state.set(f);
      for (const NumEffect& ne : a.num_eff_end) apply_effect(ne, values);
    }
    // At-start conditions see the effects of anything that just ended.
    for (std::size_t e = k; e < m; ++e) {
      if (evs[e].kind != 1) continue;
      const GroundAction& a = task.actions[steps[evs[e].idx].action];
      check_bool(a.pre_start, steps[evs[e].idx].action, t, "at-start");
      check_num(a.num_pre_start, steps[evs[e].idx].action, t, "at-start");
    }
    for (std::size_t e = k; e < m; ++e) {
      if (evs[e].kind != 1) continue;
      const GroundAction& a = task.actions[steps[evs[e].idx].action];
      for (FactId f : a.del_start) state.reset(f);
      for (FactId f : a.add_start) state.set(f);
      for (const NumEffect& ne : a.num_eff_start) apply_effect(ne, values);
    }

    // The state is now constant until the next time point; check the
    // invariants of every action whose open interval covers the gap.
    double t_next = m < evs.size() ? evs[m].t
                                   : std::numeric_limits<double>::infinity();
    if (m < evs.size()) {
      for (int i = 0; i < static_cast<int>(steps.size()); ++i) {
        double lo = std::max(t, steps[i].start);
        double hi = std::min(t_next, steps[i].start + steps[i].duration);
        if (!(lo < hi - kTol)) continue;
        const GroundAction& a = task.actions[steps[i].action];
        check_bool(a.pre_over, steps[i].action, lo, "over-all");
        check_num(a.num_pre_over, steps[i].action, lo, "over-all");
      }
    }
    k = m;
  }

  rep.goals_ok = true;
  for (FactId g : task.goals)
    if (!state.test(g)) {
      rep.goals_ok = false;
      viols.push_back(
          {rep.makespan, kEndAction, "goal " + task.fact_names[g] + " unmet"});
    }
  for (const NumCondition& c : task.num_goals)
    if (!holds(c, values)) {
      rep.goals_ok = false;
      viols.push_back({rep.makespan, kEndAction, "numeric goal unmet"});
    }

  rep.metric = task.metric.present
                   ? task.metric.value(values, rep.makespan)
                   : static_cast<double>(steps.size());
  std::stable_sort(viols.begin(), viols.end(),
                   [](const Violation& x, const Violation& y) {
                     return x.time < y.time;
                   });
  rep.valid = viols.empty();
  if (!viols.empty()) {
    rep.violation_time = viols.front().time;
    rep.violation_action = viols.front().action;
    rep.violation = viols.front().text;
  }
  return rep;
}

double metric_value(const GroundTask& task, const PlanSolution& plan) {
  if (!task.metric.present) return static_cast<double>(plan.steps.size());
  std::vector<double> values = task.init_values;
  for (const Event& e : make_events(plan.steps)) {
    const GroundAction& a = task.actions[plan.steps[e.idx].action];
    const auto& effs = e.kind == 0 ? a.num_eff_end : a.num_eff_start;
    for (const NumEffect& ne : effs) apply_effect(ne, values);
  }
  return task.metric.value(values, steps_makespan(plan.steps));
}

std::string format_time(double t) {
  if (std::abs(t) < 5e-5) t = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", t);
  return buf;
}

void emit_plan(std::ostream& os, const GroundTask& task,
               const PlanSolution& plan, std::uint64_t seed) {
  os << "; domain " << task.domain_name << "\n";
  os << "; problem " << task.problem_name << "\n";
  os << "; seed " << seed << "\n";
  os << "; metric " << format_time(plan.metric) << "\n";
  os << "; makespan " << format_time(plan.makespan) << "\n";
  std::vector<PlanStep> steps = plan.steps;
  sort_steps(steps, task);
  for (const PlanStep& s : steps)
    os << format_time(s.start) << ": (" << task.actions[s.action].name << ") ["
       << format_time(s.duration) << "]\n";
}

void emit_stats(std::ostream& os, const std::vector<SolutionRecord>& records) {
  os << "solution_index,wall_ms,steps,restarts,metric,makespan\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SolutionRecord& r = records[i];
    os << i + 1 << ',' << std::llround(r.found_at * 1000.0) << ','
       << r.steps_used << ',' << r.restarts_used << ','
       << format_time(r.metric) << ',' << format_time(r.makespan) << "\n";
  }
}

namespace {

// One `<start>: (<name with args>) [<duration>]` line; returns false for
// blank/comment-only lines.
bool parse_plan_line(const std::string& line, int lineno, std::string& name,
                     double& start, double& dur) {
  std::string s = line;
  std::size_t semi = s.find(';');
  if (semi != std::string::npos) s.erase(semi);
  auto fail = [&](const char* msg) {
    throw InputError(ErrorKind::syntax, msg, lineno);
  };
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_ws();
  if (i == s.size()) return false;

  char* endp = nullptr;
  start = std::strtod(s.c_str() + i, &endp);
  if (endp == s.c_str() + i) fail("expected a start time");
  i = endp - s.c_str();
  skip_ws();
  if (i == s.size() || s[i] != ':') fail("expected ':' after the start time");
  ++i;
  skip_ws();
  if (i == s.size() || s[i] != '(') fail("expected '(' before the action");
  ++i;
  std::size_t close = s.find(')', i);
  if (close == std::string::npos) fail("missing ')' after the action");
  name.clear();
  bool space = false;
  for (std::size_t j = i; j < close; ++j) {
    char c = s[j];
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !name.empty();
      continue;
    }
    if (space) name += ' ';
    space = false;
    name += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (name.empty()) fail("empty action name");
  i = close + 1;
  skip_ws();
  if (i == s.size() || s[i] != '[') fail("expected '[' before the duration");
  ++i;
  dur = std::strtod(s.c_str() + i, &endp);
  if (endp == s.c_str() + i) fail("expected a duration");
  i = endp - s.c_str();
  skip_ws();
  if (i == s.size() || s[i] != ']') fail("missing ']' after the duration");
  return true;
}

}  // namespace

PlanSolution parse_plan(const std::string& text, const GroundTask& task) {
  PlanSolution plan;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++lineno;
    std::string name;
    double start = 0.0, dur = 0.0;
    if (parse_plan_line(line, lineno, name, start, dur)) {
      ActionId id = kNoAction;
      for (ActionId a = 0; a < task.action_count(); ++a)
        if (task.actions[a].name == name) {
          id = a;
          break;
        }
      if (id == kNoAction)
        throw InputError(ErrorKind::undeclared,
                         "unknown action (" + name + ")", lineno);
      plan.steps.push_back({id, start, dur, 0});
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  sort_steps(plan.steps, task);
  plan.makespan = steps_makespan(plan.steps);
  plan.metric = metric_value(task, plan);
  return plan;
}

}  // namespace tap
