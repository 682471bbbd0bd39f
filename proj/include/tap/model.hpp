#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tap/core.hpp"

namespace tap {

// ------------------------------------------------------------------ lifted
// Parsed form of a domain/problem pair, before grounding. Identifiers are
// lower-cased by the lexer; indices refer to the owning Domain's tables.

enum class CondTag { at_start, over_all, at_end };
enum class Rel { lt, le, eq, ge, gt };
enum class AssignOp { assign, increase, decrease, scale_up, scale_down };

const char* to_string(Rel r);
const char* to_string(AssignOp a);

// Parameter reference (index into the scheme's parameter list) or constant.
struct Term {
  bool is_param = false;
  int param = -1;
  std::string name;  // constant name when !is_param
};

struct Atom {
  int pred = -1;  // index into Domain::predicates
  std::vector<Term> args;
};

struct FluentRef {
  int func = -1;  // index into Domain::functions
  std::vector<Term> args;
};

// Numeric expression over fluents; `total_time` only appears in metrics.
struct Expr {
  enum class Op { number, fluent, total_time, add, sub, mul, div, neg };
  Op op = Op::number;
  double value = 0;
  FluentRef fluent;
  std::vector<Expr> kids;

  static Expr number(double v) {
    Expr e;
    e.op = Op::number;
    e.value = v;
    return e;
  }
};

struct Literal {
  Atom atom;
  bool positive = true;
};

struct NumComparison {
  Rel rel = Rel::ge;
  Expr lhs, rhs;
};

struct NumAssignment {
  AssignOp op = AssignOp::increase;
  FluentRef target;
  Expr value;
};

struct Scheme {
  std::string name;
  std::vector<std::string> param_names;
  std::vector<int> param_types;
  bool durative = false;
  Expr duration = Expr::number(1.0);  // STRIPS actions normalize to 1

  std::vector<std::pair<CondTag, Literal>> conds;
  std::vector<std::pair<CondTag, NumComparison>> num_conds;
  std::vector<std::pair<CondTag, Literal>> effects;  // tag in {at_start, at_end}
  std::vector<std::pair<CondTag, NumAssignment>> num_effects;
};

struct Domain {
  std::string name;
  std::vector<std::string> requirements;

  struct Type {
    std::string name;
    int parent = -1;  // index into types; -1 for the root "object"
  };
  std::vector<Type> types;  // types[0] is always "object"

  struct Signature {
    std::string name;
    std::vector<int> param_types;
  };
  std::vector<Signature> predicates;
  std::vector<Signature> functions;

  std::vector<std::pair<std::string, int>> constants;  // name, type
  std::vector<Scheme> schemes;

  int type_index(const std::string& name) const;
  int predicate_index(const std::string& name) const;
  int function_index(const std::string& name) const;
  // True when `t` equals `ancestor` or derives from it.
  bool type_is_a(int t, int ancestor) const;
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::vector<std::pair<std::string, int>> objects;  // name, type

  std::vector<Atom> init_facts;                         // constant args
  std::vector<std::pair<FluentRef, double>> init_values;  // constant args
  std::vector<Literal> goal_literals;                   // constant args
  std::vector<NumComparison> goal_comparisons;

  bool has_metric = false;
  Expr metric;  // always a minimization
};

}  // namespace tap
