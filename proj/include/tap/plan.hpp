#pragma once

// Plan extraction from a solution graph, an independent validator that
// replays the schedule event point by event point, metric evaluation, and
// the plan / stats file formats.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tap/core.hpp"
#include "tap/graph.hpp"
#include "tap/ground.hpp"
#include "tap/mutex.hpp"
#include "tap/search.hpp"

namespace tap {

struct PlanStep {
  ActionId action = kNoAction;
  double start = 0.0;
  double duration = 0.0;
  int level = 0;  // source level in the graph; 0 when parsed from a file
};

struct PlanSolution {
  std::vector<PlanStep> steps;  // sorted by start, then action name
  double makespan = 0.0;
  double metric = 0.0;
  // Ordering constraints the schedule was built under: for each entry the
  // earlier action must end no later than the later one starts.
  std::vector<OrderingConstraint> certificate;
};

// Schedule of a solution graph: start = end time minus duration, empty
// levels skipped.  Throws std::logic_error when the graph still has
// inconsistencies.
PlanSolution extract_plan(const TAGraph& graph);

struct ValidationReport {
  bool valid = false;
  bool goals_ok = false;
  double violation_time = 0.0;        // earliest violation when invalid
  ActionId violation_action = kNoAction;
  std::string violation;              // empty when valid
  double metric = 0.0;                // recomputed from the replay
  double makespan = 0.0;
};

// Independent check of a schedule against the task: simulates the start and
// end points in time order (ends before starts at equal times), checking
// at-start conditions at the start point, over-all conditions on the open
// interval, at-end conditions at the end point, requiring mutex actions not
// to overlap (end-before-start, tolerance 1e-9), and testing the goals in
// the final state.  Unknown action ids raise InputError; an invalid plan is
// a report, not an error.
ValidationReport validate(const GroundTask& task, const MutexTables& mutex,
                          const PlanSolution& plan);

// Metric at the final numeric state with total-time = makespan; without a
// metric, the number of steps.
double metric_value(const GroundTask& task, const PlanSolution& plan);

// `<start>: (<name> <args>) [<duration>]`, one line per step sorted by
// start then name, after header comments; times with four decimals.
void emit_plan(std::ostream& os, const GroundTask& task,
               const PlanSolution& plan, std::uint64_t seed);

// CSV: solution_index,wall_ms,steps,restarts,metric,makespan.
void emit_stats(std::ostream& os, const std::vector<SolutionRecord>& records);

// Four decimal places, '.' separator, negative zero normalized.
std::string format_time(double t);

// Inverse of emit_plan for the step lines (header comments ignored); steps
// come back sorted by start.  Unknown action names or malformed lines raise
// InputError.
PlanSolution parse_plan(const std::string& text, const GroundTask& task);

}  // namespace tap
