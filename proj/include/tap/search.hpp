#pragma once

// Stochastic local search over temporal action graphs: neighborhood
// construction for one inconsistency, the noise-driven step rule with
// restarts, adaptive noise, and the anytime loop that keeps searching for
// strictly better plans until the budget runs out.

#include <chrono>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "tap/core.hpp"
#include "tap/eval.hpp"
#include "tap/graph.hpp"
#include "tap/ground.hpp"
#include "tap/mutex.hpp"
#include "tap/reach.hpp"

namespace tap {

// One candidate graph change: insert `action` at `level`, or remove the
// action at `level` (`action` then names the occupant, for reporting).
struct Mutation {
  enum class Kind { insert, remove };
  Kind kind = Kind::insert;
  ActionId action = kNoAction;
  int level = 0;
};

// Resolves a numeric inconsistency to its comparison: the goal list for the
// goal pseudo-action, otherwise the owner's start/over-all/end numeric
// precondition lists flattened in that order.
const NumCondition* numeric_condition(const GroundTask& task,
                                      const Inconsistency& sigma);

// Candidates for repairing `sigma`: removal of the owner (when it is a
// domain action) plus, for a boolean inconsistency, one insertion per
// supporting action and distinct landing spot before the owner with the
// fact's chain unblocked in between — insertion levels that yield the same
// action sequence (runs of empty levels) are collapsed to the lowest.  For
// a numeric inconsistency the insertions are the actions whose single
// application narrows the comparison's violation, placed immediately
// before the owner.
std::vector<Mutation> build_neighborhood(const Inconsistency& sigma,
                                         const TAGraph& graph);

// Noise control: once the window of inconsistency counts is full, a
// coefficient of variation below the threshold bumps p by 1.25x (capped at
// 1), anything else resets it to the initial value.
class NoiseAdapter {
 public:
  NoiseAdapter(double initial, int window, double cv_threshold)
      : p_(initial), initial_(initial), window_(window), cv_(cv_threshold) {}

  void observe(int inconsistencies);
  double p() const { return p_; }

 private:
  double p_, initial_;
  int window_;
  double cv_;
  std::deque<int> history_;
};

struct SearchConfig {
  int max_steps = 500;
  int max_restarts = 30;
  double noise = 0.1;            // initial p, clamped to [0,1]
  std::uint64_t seed = 2003;
  double cpu_budget = 60.0;      // seconds of wall clock
  enum class Mode { first_solution, anytime } mode = Mode::first_solution;
  bool induced_pruning = true;

  int stop_after_solutions = 0;  // anytime: stop after this many (0 = budget)
  int noise_window = 50;
  double noise_cv_threshold = 0.05;
  double restart_growth = 1.1;   // step budget multiplier per restart
  double removal_fraction = 0.05;  // |R| = max(1, ceil(fraction * plan size))
  bool record_trace = false;
  int verbosity = 0;             // >= 1: progress lines on stderr
};

struct ScheduledStep {
  ActionId action = kNoAction;
  double start = 0.0;
  double duration = 0.0;
};

struct SolutionRecord {
  std::vector<ScheduledStep> steps;  // sorted by start, ties in level order
  double metric = 0.0;               // plan metric; total action cost without one
  double makespan = 0.0;
  double found_at = 0.0;             // seconds since run start
  long long steps_used = 0;          // cumulative search steps at emission
  int restarts_used = 0;
};

// One row per search step; solution events get branch 'S'.  branch codes:
// 's' sideways move, 'n' noise pick, 'b' best-scored pick, 'f' forced
// random removal on an empty neighborhood.
struct TraceRecord {
  long long step = 0;
  int restart = 0;
  int level = -1;        // inconsistency level
  bool numeric = false;
  FactId fact = -1;
  char branch = ' ';
  char kind = ' ';       // 'i' insert / 'r' remove
  ActionId action = kNoAction;
  int at_level = -1;     // mutation level
  double score = 0.0;    // meaningful only for branch 'b'
  int kappa = 0;         // inconsistencies before the move
  double p = 0.0;        // noise in effect
};

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace);

struct SearchOutcome {
  bool solved = false;
  std::vector<SolutionRecord> records;  // metric strictly decreasing
  long long steps = 0;
  int restarts = 0;
  std::vector<TraceRecord> trace;
};

// Plan metric of a solution graph; without a metric, the summed action cost.
double plan_quality(const GroundTask& task, const TAGraph& graph);

class SearchEngine {
 public:
  // `base` must be anchored at the task's initial state; its examination
  // order seeds every per-level reachability refresh.
  SearchEngine(const GroundTask& task, const MutexTables& mutex,
               const ReachabilityTable& base, const SearchConfig& cfg);

  const SearchOutcome& run();
  const TAGraph& graph() const { return graph_; }

 private:
  enum class StepResult { moved, solution };

  StepResult step();
  EvalContext& ctx_at(int level);
  int sideways_delta(const Mutation& m,
                     const std::vector<Inconsistency>& incs);
  EvalTriple candidate_triple(const Mutation& m);
  void apply(const Mutation& m);
  void perturb();
  void reinit();
  void emit_record();
  double elapsed() const;

  const GroundTask* task_;
  const MutexTables* mutex_;
  const ReachabilityTable* base_;
  SearchConfig cfg_;
  Rng rng_;
  Weights w_;
  NoiseAdapter noise_;
  TAGraph graph_;
  std::unordered_map<int, EvalContext> cache_;  // per-step, keyed by level
  SearchOutcome out_;
  std::vector<ActionId> best_sequence_;
  double best_quality_ = 0.0;
  bool have_solution_ = false;
  long long steps_total_ = 0;
  int restart_ = 1;
  std::chrono::steady_clock::time_point t0_;
};

// Builds the engine, runs it, and returns the outcome.
SearchOutcome run_search(const GroundTask& task, const MutexTables& mutex,
                         const ReachabilityTable& base,
                         const SearchConfig& cfg);

}  // namespace tap
