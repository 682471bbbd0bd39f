#include "tap/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tap {

const char* to_string(Rel r) {
  switch (r) {
    case Rel::lt: return "<";
    case Rel::le: return "<=";
    case Rel::eq: return "=";
    case Rel::ge: return ">=";
    case Rel::gt: return ">";
  }
  return "?";
}

const char* to_string(AssignOp a) {
  switch (a) {
    case AssignOp::assign: return "assign";
    case AssignOp::increase: return "increase";
    case AssignOp::decrease: return "decrease";
    case AssignOp::scale_up: return "scale-up";
    case AssignOp::scale_down: return "scale-down";
  }
  return "?";
}

int Domain::type_index(const std::string& name) const {
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i].name == name) return static_cast<int>(i);
  return -1;
}

int Domain::predicate_index(const std::string& name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == name) return static_cast<int>(i);
  return -1;
}

int Domain::function_index(const std::string& name) const {
  for (std::size_t i = 0; i < functions.size(); ++i)
    if (functions[i].name == name) return static_cast<int>(i);
  return -1;
}

bool Domain::type_is_a(int t, int ancestor) const {
  while (t >= 0) {
    if (t == ancestor) return true;
    t = types[t].parent;
  }
  return false;
}

namespace {

// ------------------------------------------------------------ s-expressions

struct Sexp {
  bool is_list = false;
  std::string atom;  // lower-cased
  bool is_number = false;
  double number = 0;
  std::vector<Sexp> kids;
  int line = 0, col = 0;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& msg, const Sexp& at) {
  throw InputError(kind, msg, at.line, at.col);
}

class Reader {
 public:
  Reader(std::string_view text, const std::string& source)
      : text_(text), source_(source) {}

  Sexp read_top() {
    skip_ws();
    if (at_end()) err("empty input");
    Sexp s = read();
    skip_ws();
    if (!at_end()) err("trailing content after top-level form");
    return s;
  }

 private:
  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  [[noreturn]] void err(const std::string& msg) {
    throw InputError(ErrorKind::syntax, source_ + ": " + msg, line_, col_);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == ';') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Sexp read() {
    skip_ws();
    if (at_end()) err("unexpected end of input");
    Sexp s;
    s.line = line_;
    s.col = col_;
    if (peek() == '(') {
      advance();
      s.is_list = true;
      while (true) {
        skip_ws();
        if (at_end()) err("unbalanced '(': missing ')'");
        if (peek() == ')') {
          advance();
          break;
        }
        s.kids.push_back(read());
      }
      return s;
    }
    if (peek() == ')') err("unexpected ')'");
    std::string tok;
    while (!at_end()) {
      char c = peek();
      if (c == '(' || c == ')' || c == ';' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      tok.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(advance()))));
    }
    s.atom = tok;
    // Classify numbers; a lone "-" or "+" stays symbolic (type separators,
    // arithmetic heads).
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end && *end == '\0' && end != tok.c_str() && tok != "-" && tok != "+") {
      s.is_number = true;
      s.number = v;
    }
    return s;
  }
};

bool is_sym(const Sexp& s, const char* name) {
  return !s.is_list && !s.is_number && s.atom == name;
}

const std::string& sym(const Sexp& s, const char* what) {
  if (s.is_list || s.is_number)
    fail(ErrorKind::syntax, std::string("expected ") + what, s);
  return s.atom;
}

// ------------------------------------------------------------ shared pieces

const char* kSupportedRequirements[] = {
    ":strips", ":typing", ":fluents", ":durative-actions",
    ":negative-preconditions"};

struct ParamScope {
  // Action parameters (or empty for ground contexts).
  const std::vector<std::string>* names = nullptr;
  const std::vector<int>* types = nullptr;

  int find(const std::string& name) const {
    if (!names) return -1;
    for (std::size_t i = 0; i < names->size(); ++i)
      if ((*names)[i] == name) return static_cast<int>(i);
    return -1;
  }
};

class DomainParser {
 public:
  explicit DomainParser(Domain& d) : d_(d) {}

  void run(const Sexp& top) {
    if (!top.is_list || top.kids.empty() || !is_sym(top.kids[0], "define"))
      fail(ErrorKind::syntax, "expected (define (domain ...) ...)", top);
    if (top.kids.size() < 2 || !top.kids[1].is_list ||
        top.kids[1].kids.size() != 2 || !is_sym(top.kids[1].kids[0], "domain"))
      fail(ErrorKind::syntax, "expected (domain <name>)", top);
    d_.name = sym(top.kids[1].kids[1], "domain name");
    d_.types.push_back({"object", -1});

    for (std::size_t i = 2; i < top.kids.size(); ++i) {
      const Sexp& sec = top.kids[i];
      if (!sec.is_list || sec.kids.empty())
        fail(ErrorKind::syntax, "expected a domain section", sec);
      const std::string& head = sym(sec.kids[0], "section keyword");
      if (head == ":requirements")
        parse_requirements(sec);
      else if (head == ":types")
        parse_types(sec);
      else if (head == ":constants")
        parse_typed_names(sec, d_.constants);
      else if (head == ":predicates")
        parse_signatures(sec, d_.predicates);
      else if (head == ":functions")
        parse_signatures(sec, d_.functions);
      else if (head == ":action")
        parse_action(sec, false);
      else if (head == ":durative-action")
        parse_action(sec, true);
      else if (head == ":derived")
        fail(ErrorKind::unsupported, "derived predicates are not supported", sec);
      else
        fail(ErrorKind::unsupported, "unsupported domain section " + head, sec);
    }
  }

  // Exposed for problem parsing.
  Expr parse_expr(const Sexp& s, const ParamScope& scope, bool allow_total_time) {
    if (s.is_number) return Expr::number(s.number);
    if (!s.is_list) {
      if (!s.atom.empty() && s.atom[0] == '?')
        fail(ErrorKind::unsupported,
             "variable " + s.atom + " is not allowed in numeric expressions", s);
      fail(ErrorKind::syntax, "expected a numeric expression", s);
    }
    if (s.kids.empty())
      fail(ErrorKind::syntax, "empty numeric expression", s);
    const Sexp& head = s.kids[0];
    if (!head.is_list && !head.is_number &&
        (head.atom == "+" || head.atom == "-" || head.atom == "*" ||
         head.atom == "/")) {
      Expr e;
      if (head.atom == "-" && s.kids.size() == 2) {
        e.op = Expr::Op::neg;
        e.kids.push_back(parse_expr(s.kids[1], scope, allow_total_time));
        return e;
      }
      if (s.kids.size() < 3)
        fail(ErrorKind::syntax, "operator " + head.atom + " needs two operands", s);
      if ((head.atom == "-" || head.atom == "/") && s.kids.size() != 3)
        fail(ErrorKind::syntax, "operator " + head.atom + " is binary", s);
      e.op = head.atom == "+"   ? Expr::Op::add
             : head.atom == "-" ? Expr::Op::sub
             : head.atom == "*" ? Expr::Op::mul
                                : Expr::Op::div;
      for (std::size_t i = 1; i < s.kids.size(); ++i)
        e.kids.push_back(parse_expr(s.kids[i], scope, allow_total_time));
      return e;
    }
    // Fluent reference (f arg...) or (total-time).
    const std::string& name = sym(head, "fluent name");
    if (name == "total-time") {
      if (!allow_total_time)
        fail(ErrorKind::unsupported,
             "(total-time) is only allowed in the metric", s);
      if (s.kids.size() != 1)
        fail(ErrorKind::syntax, "(total-time) takes no arguments", s);
      Expr e;
      e.op = Expr::Op::total_time;
      return e;
    }
    Expr e;
    e.op = Expr::Op::fluent;
    e.fluent = parse_fluent_ref(s, scope);
    return e;
  }

  FluentRef parse_fluent_ref(const Sexp& s, const ParamScope& scope) {
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected (function arg...)", s);
    const std::string& name = sym(s.kids[0], "function name");
    FluentRef ref;
    ref.func = d_.function_index(name);
    if (ref.func < 0)
      fail(ErrorKind::undeclared, "undeclared function " + name, s);
    const auto& sig = d_.functions[ref.func];
    if (s.kids.size() - 1 != sig.param_types.size())
      fail(ErrorKind::semantic, "wrong arity for function " + name, s);
    for (std::size_t i = 1; i < s.kids.size(); ++i)
      ref.args.push_back(parse_term(s.kids[i], scope));
    return ref;
  }

  Atom parse_atom(const Sexp& s, const ParamScope& scope) {
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected (predicate arg...)", s);
    const std::string& name = sym(s.kids[0], "predicate name");
    if (name == "=")
      fail(ErrorKind::unsupported, "equality atoms are not supported", s);
    Atom a;
    a.pred = d_.predicate_index(name);
    if (a.pred < 0)
      fail(ErrorKind::undeclared, "undeclared predicate " + name, s);
    const auto& sig = d_.predicates[a.pred];
    if (s.kids.size() - 1 != sig.param_types.size())
      fail(ErrorKind::semantic, "wrong arity for predicate " + name, s);
    for (std::size_t i = 1; i < s.kids.size(); ++i)
      a.args.push_back(parse_term(s.kids[i], scope));
    return a;
  }

  Term parse_term(const Sexp& s, const ParamScope& scope) {
    const std::string& name = sym(s, "term");
    Term t;
    if (!name.empty() && name[0] == '?') {
      if (name == "?duration")
        fail(ErrorKind::unsupported,
             "?duration may only appear in the :duration clause", s);
      int p = scope.find(name);
      if (p < 0) fail(ErrorKind::undeclared, "unbound variable " + name, s);
      t.is_param = true;
      t.param = p;
    } else {
      t.name = name;
    }
    return t;
  }

 private:
  Domain& d_;

  void parse_requirements(const Sexp& sec) {
    for (std::size_t i = 1; i < sec.kids.size(); ++i) {
      const std::string& req = sym(sec.kids[i], "requirement");
      bool ok = false;
      for (const char* s : kSupportedRequirements) ok |= (req == s);
      if (!ok)
        fail(ErrorKind::unsupported, "unsupported requirement " + req,
             sec.kids[i]);
      d_.requirements.push_back(req);
    }
  }

  int require_type(const Sexp& s) {
    const std::string& name = sym(s, "type name");
    if (name == "either")
      fail(ErrorKind::unsupported, "either-types are not supported", s);
    int t = d_.type_index(name);
    if (t < 0) fail(ErrorKind::undeclared, "undeclared type " + name, s);
    return t;
  }

  void parse_types(const Sexp& sec) {
    // names... [- parent] repeated; new types register in order.
    std::vector<const Sexp*> pending;
    std::size_t i = 1;
    auto flush = [&](int parent) {
      for (const Sexp* p : pending) {
        const std::string& name = sym(*p, "type name");
        if (d_.type_index(name) >= 0)
          fail(ErrorKind::semantic, "duplicate type " + name, *p);
        d_.types.push_back({name, parent});
      }
      pending.clear();
    };
    while (i < sec.kids.size()) {
      if (is_sym(sec.kids[i], "-")) {
        if (pending.empty())
          fail(ErrorKind::syntax, "dangling '-' in :types", sec.kids[i]);
        ++i;
        if (i >= sec.kids.size())
          fail(ErrorKind::syntax, "missing parent type", sec.kids[i - 1]);
        const std::string& parent_name = sym(sec.kids[i], "type name");
        int parent = d_.type_index(parent_name);
        if (parent < 0) {
          // Forward-declared parents are common; register under object.
          d_.types.push_back({parent_name, 0});
          parent = static_cast<int>(d_.types.size()) - 1;
        }
        flush(parent);
        ++i;
      } else {
        pending.push_back(&sec.kids[i]);
        ++i;
      }
    }
    flush(0);
  }

  void parse_typed_names(const Sexp& sec,
                         std::vector<std::pair<std::string, int>>& out) {
    std::vector<const Sexp*> pending;
    std::size_t i = 1;
    auto flush = [&](int type) {
      for (const Sexp* p : pending)
        out.emplace_back(sym(*p, "name"), type);
      pending.clear();
    };
    while (i < sec.kids.size()) {
      if (is_sym(sec.kids[i], "-")) {
        ++i;
        if (i >= sec.kids.size())
          fail(ErrorKind::syntax, "missing type after '-'", sec.kids[i - 1]);
        flush(require_type(sec.kids[i]));
        ++i;
      } else {
        pending.push_back(&sec.kids[i]);
        ++i;
      }
    }
    flush(0);
  }

  void parse_signatures(const Sexp& sec, std::vector<Domain::Signature>& out) {
    for (std::size_t i = 1; i < sec.kids.size(); ++i) {
      const Sexp& p = sec.kids[i];
      if (!p.is_list || p.kids.empty())
        fail(ErrorKind::syntax, "expected a declaration list", p);
      Domain::Signature sig;
      sig.name = sym(p.kids[0], "name");
      std::vector<std::string> var_names;
      std::vector<int> var_types;
      parse_params(p, 1, var_names, var_types);
      sig.param_types = var_types;
      out.push_back(std::move(sig));
    }
  }

  void parse_params(const Sexp& list, std::size_t from,
                    std::vector<std::string>& names, std::vector<int>& types) {
    std::vector<const Sexp*> pending;
    auto flush = [&](int type) {
      for (const Sexp* p : pending) {
        const std::string& v = sym(*p, "parameter");
        if (v.empty() || v[0] != '?')
          fail(ErrorKind::syntax, "expected a ?variable", *p);
        for (const auto& existing : names)
          if (existing == v)
            fail(ErrorKind::semantic, "duplicate parameter " + v, *p);
        names.push_back(v);
        types.push_back(type);
      }
      pending.clear();
    };
    std::size_t i = from;
    while (i < list.kids.size()) {
      if (is_sym(list.kids[i], "-")) {
        ++i;
        if (i >= list.kids.size())
          fail(ErrorKind::syntax, "missing type after '-'", list.kids[i - 1]);
        flush(require_type(list.kids[i]));
        ++i;
      } else {
        pending.push_back(&list.kids[i]);
        ++i;
      }
    }
    flush(0);
  }

  // ---------------------------------------------------------------- actions

  void parse_action(const Sexp& sec, bool durative) {
    Scheme sc;
    sc.durative = durative;
    if (sec.kids.size() < 2)
      fail(ErrorKind::syntax, "action needs a name", sec);
    sc.name = sym(sec.kids[1], "action name");

    std::size_t i = 2;
    bool saw_duration = false;
    while (i < sec.kids.size()) {
      const std::string& key = sym(sec.kids[i], "action keyword");
      if (i + 1 >= sec.kids.size())
        fail(ErrorKind::syntax, "missing value after " + key, sec.kids[i]);
      const Sexp& val = sec.kids[i + 1];
      if (key == ":parameters") {
        if (!val.is_list)
          fail(ErrorKind::syntax, ":parameters expects a list", val);
        parse_params(val, 0, sc.param_names, sc.param_types);
      } else if (key == ":duration") {
        if (!durative)
          fail(ErrorKind::syntax, ":duration on a non-durative action", val);
        sc.duration = parse_duration(val, sc);
        saw_duration = true;
      } else if (key == ":precondition" || key == ":condition") {
        if (durative && key == ":precondition")
          fail(ErrorKind::syntax, "durative actions use :condition", val);
        if (!durative && key == ":condition")
          fail(ErrorKind::syntax, "simple actions use :precondition", val);
        parse_condition(val, sc, durative);
      } else if (key == ":effect") {
        parse_effect(val, sc, durative);
      } else {
        fail(ErrorKind::unsupported, "unsupported action keyword " + key,
             sec.kids[i]);
      }
      i += 2;
    }
    if (durative && !saw_duration)
      fail(ErrorKind::syntax, "durative action " + sc.name + " lacks :duration",
           sec);
    d_.schemes.push_back(std::move(sc));
  }

  Expr parse_duration(const Sexp& s, const Scheme& sc) {
    // Exactly (= ?duration <expr>); inequality or conjunction forms are the
    // :duration-inequalities extension, which we do not support.
    if (!s.is_list || s.kids.size() != 3 || !is_sym(s.kids[0], "=") ||
        !is_sym(s.kids[1], "?duration"))
      fail(ErrorKind::unsupported,
           "only (= ?duration <expr>) durations are supported", s);
    ParamScope scope{&sc.param_names, &sc.param_types};
    return parse_expr(s.kids[2], scope, false);
  }

  Rel parse_rel(const Sexp& head) {
    const std::string& op = sym(head, "comparison operator");
    if (op == "<") return Rel::lt;
    if (op == "<=") return Rel::le;
    if (op == "=") return Rel::eq;
    if (op == ">=") return Rel::ge;
    if (op == ">") return Rel::gt;
    fail(ErrorKind::syntax, "expected a comparison operator", head);
  }

  bool is_comparison_head(const Sexp& s) {
    if (!s.is_list || s.kids.empty() || s.kids[0].is_list) return false;
    const std::string& a = s.kids[0].atom;
    return a == "<" || a == "<=" || a == ">=" || a == ">" ||
           (a == "=" && s.kids.size() == 3 &&
            (s.kids[1].is_number || looks_like_fluent(s.kids[1])));
  }

  bool looks_like_fluent(const Sexp& s) {
    if (s.is_number) return true;
    if (!s.is_list || s.kids.empty() || s.kids[0].is_list) return false;
    const std::string& h = s.kids[0].atom;
    return h == "+" || h == "-" || h == "*" || h == "/" ||
           d_.function_index(h) >= 0;
  }

  void reject_adl(const Sexp& s, const std::string& head) {
    if (head == "forall" || head == "exists" || head == "when" ||
        head == "imply" || head == "or")
      fail(ErrorKind::unsupported, head + " is not supported", s);
  }

  // Non-durative goal descriptions; fills conds with the given tag.
  void parse_gd(const Sexp& s, Scheme& sc, CondTag tag) {
    ParamScope scope{&sc.param_names, &sc.param_types};
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected a condition", s);
    const Sexp& head = s.kids[0];
    if (!head.is_list && !head.is_number) {
      reject_adl(s, head.atom);
      if (head.atom == "and") {
        for (std::size_t i = 1; i < s.kids.size(); ++i) parse_gd(s.kids[i], sc, tag);
        return;
      }
      if (head.atom == "not") {
        if (s.kids.size() != 2)
          fail(ErrorKind::syntax, "(not ...) takes one argument", s);
        Literal lit;
        lit.atom = parse_atom(s.kids[1], scope);
        lit.positive = false;
        sc.conds.emplace_back(tag, std::move(lit));
        return;
      }
      if (is_comparison_head(s)) {
        NumComparison c;
        c.rel = parse_rel(head);
        if (s.kids.size() != 3)
          fail(ErrorKind::syntax, "comparison takes two operands", s);
        c.lhs = parse_expr(s.kids[1], scope, false);
        c.rhs = parse_expr(s.kids[2], scope, false);
        sc.num_conds.emplace_back(tag, std::move(c));
        return;
      }
    }
    Literal lit;
    lit.atom = parse_atom(s, scope);
    sc.conds.emplace_back(tag, std::move(lit));
  }

  void parse_condition(const Sexp& s, Scheme& sc, bool durative) {
    if (!durative) {
      // Plain preconditions hold across the (unit-length) action.
      parse_gd(s, sc, CondTag::over_all);
      return;
    }
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected a durative condition", s);
    if (is_sym(s.kids[0], "and")) {
      for (std::size_t i = 1; i < s.kids.size(); ++i)
        parse_condition(s.kids[i], sc, true);
      return;
    }
    if (is_sym(s.kids[0], "at") || is_sym(s.kids[0], "over")) {
      if (s.kids.size() != 3)
        fail(ErrorKind::syntax, "expected (at start ...), (at end ...) or (over all ...)", s);
      CondTag tag;
      if (is_sym(s.kids[0], "over")) {
        if (!is_sym(s.kids[1], "all"))
          fail(ErrorKind::syntax, "expected (over all ...)", s);
        tag = CondTag::over_all;
      } else if (is_sym(s.kids[1], "start")) {
        tag = CondTag::at_start;
      } else if (is_sym(s.kids[1], "end")) {
        tag = CondTag::at_end;
      } else {
        fail(ErrorKind::syntax, "expected start or end", s.kids[1]);
      }
      parse_gd(s.kids[2], sc, tag);
      return;
    }
    fail(ErrorKind::syntax,
         "durative conditions need (at start|end ...) or (over all ...)", s);
  }

  void parse_simple_effect(const Sexp& s, Scheme& sc, CondTag tag) {
    ParamScope scope{&sc.param_names, &sc.param_types};
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected an effect", s);
    const Sexp& head = s.kids[0];
    if (!head.is_list && !head.is_number) {
      reject_adl(s, head.atom);
      if (head.atom == "when")
        fail(ErrorKind::unsupported, "conditional effects are not supported", s);
      if (head.atom == "and") {
        for (std::size_t i = 1; i < s.kids.size(); ++i)
          parse_simple_effect(s.kids[i], sc, tag);
        return;
      }
      if (head.atom == "not") {
        if (s.kids.size() != 2)
          fail(ErrorKind::syntax, "(not ...) takes one argument", s);
        Literal lit;
        lit.atom = parse_atom(s.kids[1], scope);
        lit.positive = false;
        sc.effects.emplace_back(tag, std::move(lit));
        return;
      }
      if (head.atom == "assign" || head.atom == "increase" ||
          head.atom == "decrease" || head.atom == "scale-up" ||
          head.atom == "scale-down") {
        if (s.kids.size() != 3)
          fail(ErrorKind::syntax, head.atom + " takes a fluent and a value", s);
        NumAssignment eff;
        eff.op = head.atom == "assign"     ? AssignOp::assign
                 : head.atom == "increase" ? AssignOp::increase
                 : head.atom == "decrease" ? AssignOp::decrease
                 : head.atom == "scale-up" ? AssignOp::scale_up
                                           : AssignOp::scale_down;
        eff.target = parse_fluent_ref(s.kids[1], scope);
        eff.value = parse_expr(s.kids[2], scope, false);
        sc.num_effects.emplace_back(tag, std::move(eff));
        return;
      }
    }
    Literal lit;
    lit.atom = parse_atom(s, scope);
    sc.effects.emplace_back(tag, std::move(lit));
  }

  void parse_effect(const Sexp& s, Scheme& sc, bool durative) {
    if (!durative) {
      // Simple action effects land at the end of the unit interval.
      parse_simple_effect(s, sc, CondTag::at_end);
      return;
    }
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected a durative effect", s);
    if (is_sym(s.kids[0], "and")) {
      for (std::size_t i = 1; i < s.kids.size(); ++i)
        parse_effect(s.kids[i], sc, true);
      return;
    }
    if (is_sym(s.kids[0], "at")) {
      if (s.kids.size() != 3)
        fail(ErrorKind::syntax, "expected (at start ...) or (at end ...)", s);
      CondTag tag;
      if (is_sym(s.kids[1], "start"))
        tag = CondTag::at_start;
      else if (is_sym(s.kids[1], "end"))
        tag = CondTag::at_end;
      else
        fail(ErrorKind::syntax, "expected start or end", s.kids[1]);
      parse_simple_effect(s.kids[2], sc, tag);
      return;
    }
    fail(ErrorKind::syntax, "durative effects need (at start|end ...)", s);
  }
};

}  // namespace

Domain parse_domain(std::string_view text, const std::string& source_name) {
  Reader reader(text, source_name);
  Sexp top = reader.read_top();
  Domain d;
  DomainParser(d).run(top);
  return d;
}

namespace {

class ProblemParser {
 public:
  ProblemParser(Problem& p, const Domain& d) : p_(p), d_(d), helper_(dmut_) {
    dmut_ = d;  // DomainParser needs a mutable ref; it never mutates here.
  }

  void run(const Sexp& top) {
    if (!top.is_list || top.kids.empty() || !is_sym(top.kids[0], "define"))
      fail(ErrorKind::syntax, "expected (define (problem ...) ...)", top);
    if (top.kids.size() < 2 || !top.kids[1].is_list ||
        top.kids[1].kids.size() != 2 || !is_sym(top.kids[1].kids[0], "problem"))
      fail(ErrorKind::syntax, "expected (problem <name>)", top);
    p_.name = sym(top.kids[1].kids[1], "problem name");

    for (std::size_t i = 2; i < top.kids.size(); ++i) {
      const Sexp& sec = top.kids[i];
      if (!sec.is_list || sec.kids.empty())
        fail(ErrorKind::syntax, "expected a problem section", sec);
      const std::string& head = sym(sec.kids[0], "section keyword");
      if (head == ":domain") {
        if (sec.kids.size() != 2)
          fail(ErrorKind::syntax, "expected (:domain <name>)", sec);
        p_.domain_name = sym(sec.kids[1], "domain name");
        if (p_.domain_name != d_.name)
          fail(ErrorKind::semantic,
               "problem requires domain " + p_.domain_name + " but got " + d_.name,
               sec);
      } else if (head == ":objects") {
        parse_objects(sec);
      } else if (head == ":init") {
        parse_init(sec);
      } else if (head == ":goal") {
        if (sec.kids.size() != 2)
          fail(ErrorKind::syntax, "expected (:goal <condition>)", sec);
        parse_goal(sec.kids[1]);
      } else if (head == ":metric") {
        parse_metric(sec);
      } else {
        fail(ErrorKind::unsupported, "unsupported problem section " + head, sec);
      }
    }
  }

 private:
  Problem& p_;
  const Domain& d_;
  Domain dmut_;
  DomainParser helper_;
  ParamScope ground_scope_;  // empty: ground contexts have no parameters

  void parse_objects(const Sexp& sec) {
    std::vector<const Sexp*> pending;
    std::size_t i = 1;
    auto flush = [&](int type) {
      for (const Sexp* p : pending)
        p_.objects.emplace_back(sym(*p, "object name"), type);
      pending.clear();
    };
    while (i < sec.kids.size()) {
      if (is_sym(sec.kids[i], "-")) {
        ++i;
        if (i >= sec.kids.size())
          fail(ErrorKind::syntax, "missing type after '-'", sec.kids[i - 1]);
        const std::string& tn = sym(sec.kids[i], "type name");
        int t = d_.type_index(tn);
        if (t < 0) fail(ErrorKind::undeclared, "undeclared type " + tn, sec.kids[i]);
        flush(t);
        ++i;
      } else {
        pending.push_back(&sec.kids[i]);
        ++i;
      }
    }
    flush(0);
  }

  void parse_init(const Sexp& sec) {
    for (std::size_t i = 1; i < sec.kids.size(); ++i) {
      const Sexp& e = sec.kids[i];
      if (!e.is_list || e.kids.empty())
        fail(ErrorKind::syntax, "expected an init element", e);
      if (is_sym(e.kids[0], "at") && e.kids.size() >= 2 && e.kids[1].is_number)
        fail(ErrorKind::unsupported, "timed initial literals are not supported", e);
      if (is_sym(e.kids[0], "not"))
        fail(ErrorKind::unsupported,
             "negated init literals are not supported (closed world)", e);
      if (is_sym(e.kids[0], "=") && e.kids.size() == 3) {
        FluentRef ref = helper_.parse_fluent_ref(e.kids[1], ground_scope_);
        if (!e.kids[2].is_number)
          fail(ErrorKind::syntax, "init assignment needs a number", e.kids[2]);
        p_.init_values.emplace_back(std::move(ref), e.kids[2].number);
        continue;
      }
      p_.init_facts.push_back(helper_.parse_atom(e, ground_scope_));
    }
  }

  void parse_goal(const Sexp& s) {
    if (!s.is_list || s.kids.empty())
      fail(ErrorKind::syntax, "expected a goal condition", s);
    const Sexp& head = s.kids[0];
    if (!head.is_list && !head.is_number) {
      if (head.atom == "forall" || head.atom == "exists" ||
          head.atom == "imply" || head.atom == "or")
        fail(ErrorKind::unsupported, head.atom + " is not supported", s);
      if (head.atom == "and") {
        for (std::size_t i = 1; i < s.kids.size(); ++i) parse_goal(s.kids[i]);
        return;
      }
      if (head.atom == "not") {
        if (s.kids.size() != 2)
          fail(ErrorKind::syntax, "(not ...) takes one argument", s);
        Literal lit;
        lit.atom = helper_.parse_atom(s.kids[1], ground_scope_);
        lit.positive = false;
        p_.goal_literals.push_back(std::move(lit));
        return;
      }
      if (head.atom == "<" || head.atom == "<=" || head.atom == ">=" ||
          head.atom == ">" ||
          (head.atom == "=" && s.kids.size() == 3 && looks_numeric(s.kids[1]))) {
        NumComparison c;
        c.rel = head.atom == "<"    ? Rel::lt
                : head.atom == "<=" ? Rel::le
                : head.atom == ">=" ? Rel::ge
                : head.atom == ">"  ? Rel::gt
                                    : Rel::eq;
        if (s.kids.size() != 3)
          fail(ErrorKind::syntax, "comparison takes two operands", s);
        c.lhs = helper_.parse_expr(s.kids[1], ground_scope_, false);
        c.rhs = helper_.parse_expr(s.kids[2], ground_scope_, false);
        p_.goal_comparisons.push_back(std::move(c));
        return;
      }
    }
    Literal lit;
    lit.atom = helper_.parse_atom(s, ground_scope_);
    p_.goal_literals.push_back(std::move(lit));
  }

  bool looks_numeric(const Sexp& s) {
    if (s.is_number) return true;
    if (!s.is_list || s.kids.empty() || s.kids[0].is_list) return false;
    const std::string& h = s.kids[0].atom;
    return h == "+" || h == "-" || h == "*" || h == "/" ||
           d_.function_index(h) >= 0;
  }

  void parse_metric(const Sexp& sec) {
    if (sec.kids.size() != 3)
      fail(ErrorKind::syntax, "expected (:metric minimize <expr>)", sec);
    const std::string& dir = sym(sec.kids[1], "metric direction");
    if (dir == "maximize")
      fail(ErrorKind::unsupported, "metric maximization is not supported", sec);
    if (dir != "minimize")
      fail(ErrorKind::syntax, "expected minimize", sec.kids[1]);
    p_.has_metric = true;
    p_.metric = helper_.parse_expr(sec.kids[2], ground_scope_, true);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Problem parse_problem(std::string_view text, const Domain& domain,
                      const std::string& source_name) {
  Reader reader(text, source_name);
  Sexp top = reader.read_top();
  Problem p;
  ProblemParser(p, domain).run(top);
  return p;
}

Domain parse_domain_file(const std::string& path) {
  return parse_domain(read_file(path), path);
}

Problem parse_problem_file(const std::string& path, const Domain& domain) {
  return parse_problem(read_file(path), domain, path);
}

}  // namespace tap
