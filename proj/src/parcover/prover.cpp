#include "parcover/prover.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace parcover {

// ---------------------------------------------------------------------------
// Clause <-> term

Term clause_to_term(const Clause& c) {
  Term body = Term::atom("true");
  if (!c.body.empty()) {
    body = c.body.back();
    for (auto it = c.body.rbegin() + 1; it != c.body.rend(); ++it) {
      std::vector<Term> args;
      args.reserve(2);
      args.push_back(*it);
      args.push_back(std::move(body));
      body = Term::compound(",", std::move(args));
    }
  }
  std::vector<Term> args;
  args.reserve(2);
  args.push_back(c.head);
  args.push_back(std::move(body));
  return Term::compound(":-", std::move(args));
}

namespace {

void flatten_conjunction(const Term& t, std::vector<Term>& out) {
  if (t.is_functor(",", 2)) {
    flatten_conjunction(t.args()[0], out);
    flatten_conjunction(t.args()[1], out);
    return;
  }
  if (t.is_atom_named("true")) return;
  out.push_back(t);
}

}  // namespace

Clause clause_from_term(const Term& t) {
  Clause c;
  if (t.is_functor(":-", 2)) {
    c.head = t.args()[0];
    flatten_conjunction(t.args()[1], c.body);
  } else {
    c.head = t;
  }
  if (!(c.head.is_atom() || c.head.is_compound()))
    throw std::invalid_argument("clause head must be an atom or a compound");
  return c;
}

std::string clause_text(const Clause& c) { return print_term(clause_to_term(c)); }

Background load_background(const std::filesystem::path& path,
                           std::vector<Term>* mode_facts) {
  std::ifstream in(path);
  if (!in) throw DatasetParseError(path, 0, "cannot open file");
  Background bg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char ch : line) {
      if (ch == '%') break;
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        blank = false;
        break;
      }
    }
    ++lineno;
    if (blank) continue;
    Term t;
    try {
      t = parse_term(line);
    } catch (const std::runtime_error& e) {
      throw DatasetParseError(path, lineno, e.what());
    }
    if (t.is_functor("mode", 1)) {
      if (mode_facts) mode_facts->push_back(t.args()[0]);
      continue;
    }
    bg.clauses.push_back(clause_from_term(t));
  }
  return bg;
}

// ---------------------------------------------------------------------------
// Bindings and unification

const Term* Bindings::lookup(const std::string& var) const {
  auto it = map_.find(var);
  return it == map_.end() ? nullptr : &it->second;
}

void Bindings::bind(std::string var, Term value) {
  trail_.push_back(var);
  map_.emplace(std::move(var), std::move(value));
}

void Bindings::undo_to(std::size_t mark) {
  while (trail_.size() > mark) {
    map_.erase(trail_.back());
    trail_.pop_back();
  }
}

const Term& Bindings::deref(const Term& t) const {
  const Term* cur = &t;
  while (cur->is_var()) {
    const Term* next = lookup(cur->name());
    if (!next) break;
    cur = next;
  }
  return *cur;
}

namespace {

bool occurs(const std::string& var, const Term& t, const Bindings& b) {
  const Term& d = b.deref(t);
  if (d.is_var()) return d.name() == var;
  for (const Term& a : d.args())
    if (occurs(var, a, b)) return true;
  return false;
}

}  // namespace

bool unify(const Term& a, const Term& b, Bindings& bindings) {
  const Term& x = bindings.deref(a);
  const Term& y = bindings.deref(b);
  if (x.is_var()) {
    if (y.is_var() && y.name() == x.name()) return true;
    if (occurs(x.name(), y, bindings)) return false;
    bindings.bind(x.name(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs(y.name(), x, bindings)) return false;
    bindings.bind(y.name(), x);
    return true;
  }
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case TermKind::Atom:
      return x.name() == y.name();
    case TermKind::Int:
      return x.int_value() == y.int_value();
    case TermKind::Float:
      return x.float_value() == y.float_value();
    case TermKind::Compound: {
      if (x.name() != y.name() || x.arity() != y.arity()) return false;
      // deref'd references may be invalidated by rehashing once we bind, so
      // take copies of the argument lists before recursing
      std::vector<Term> xs = x.args();
      std::vector<Term> ys = y.args();
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (!unify(xs[i], ys[i], bindings)) return false;
      return true;
    }
    case TermKind::Var:
      break;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Resolution engine

namespace {

struct Num {
  bool is_int;
  std::int64_t i;
  double d;
  double as_double() const { return is_int ? static_cast<double>(i) : d; }
};

std::int64_t floored_mod(std::int64_t a, std::int64_t b) {
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

std::optional<Num> eval_arith(const Term& t, const Bindings& b) {
  const Term& d = b.deref(t);
  switch (d.kind()) {
    case TermKind::Int:
      return Num{true, d.int_value(), 0};
    case TermKind::Float:
      return Num{false, 0, d.float_value()};
    case TermKind::Compound:
      break;
    default:
      return std::nullopt;
  }
  if (d.arity() == 1 && d.name() == "-") {
    auto v = eval_arith(d.args()[0], b);
    if (!v) return std::nullopt;
    if (v->is_int) return Num{true, -v->i, 0};
    return Num{false, 0, -v->d};
  }
  if (d.arity() != 2) return std::nullopt;
  auto lhs = eval_arith(d.args()[0], b);
  auto rhs = eval_arith(d.args()[1], b);
  if (!lhs || !rhs) return std::nullopt;
  const std::string& op = d.name();
  if (op == "mod") {
    if (!lhs->is_int || !rhs->is_int || rhs->i == 0) return std::nullopt;
    return Num{true, floored_mod(lhs->i, rhs->i), 0};
  }
  bool ints = lhs->is_int && rhs->is_int;
  if (op == "+")
    return ints ? Num{true, lhs->i + rhs->i, 0}
                : Num{false, 0, lhs->as_double() + rhs->as_double()};
  if (op == "-")
    return ints ? Num{true, lhs->i - rhs->i, 0}
                : Num{false, 0, lhs->as_double() - rhs->as_double()};
  if (op == "*")
    return ints ? Num{true, lhs->i * rhs->i, 0}
                : Num{false, 0, lhs->as_double() * rhs->as_double()};
  return std::nullopt;
}

int compare_nums(const Num& a, const Num& b) {
  if (a.is_int && b.is_int) return a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
  double x = a.as_double(), y = b.as_double();
  return x < y ? -1 : (x > y ? 1 : 0);
}

bool equal_under(const Term& a, const Term& b, const Bindings& bnd) {
  const Term& x = bnd.deref(a);
  const Term& y = bnd.deref(b);
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case TermKind::Atom:
    case TermKind::Var:
      return x.name() == y.name();
    case TermKind::Int:
      return x.int_value() == y.int_value();
    case TermKind::Float:
      return x.float_value() == y.float_value();
    case TermKind::Compound:
      if (x.name() != y.name() || x.arity() != y.arity()) return false;
      for (std::size_t i = 0; i < x.arity(); ++i)
        if (!equal_under(x.args()[i], y.args()[i], bnd)) return false;
      return true;
  }
  return false;
}

bool is_builtin(const std::string& name, std::size_t arity) {
  if (arity != 2) return false;
  return name == "is" || name == "=:=" || name == "<" || name == ">" ||
         name == "=<" || name == ">=" || name == "==";
}

std::string functor_key(const Term& goal) {
  if (goal.is_atom()) return goal.name() + "/0";
  return goal.name() + "/" + std::to_string(goal.arity());
}

Term rename_apart(const Term& t, const std::string& suffix) {
  switch (t.kind()) {
    case TermKind::Var:
      return Term::var(t.name() + suffix);
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const Term& a : t.args()) args.push_back(rename_apart(a, suffix));
      return Term::compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

Clause rename_apart(const Clause& c, std::uint64_t serial) {
  std::string suffix = "_r" + std::to_string(serial);
  Clause out;
  out.head = rename_apart(c.head, suffix);
  out.body.reserve(c.body.size());
  for (const Term& lit : c.body) out.body.push_back(rename_apart(lit, suffix));
  return out;
}

}  // namespace

struct Prover::Engine {
  Prover& p;
  Bindings bindings;
  using Cont = std::function<bool()>;

  void spin_cost() {
    ++p.stats_.builtin_calls;
    auto cost = p.bg_.cost_per_builtin_call;
    if (cost.count() <= 0) return;
    auto until = std::chrono::steady_clock::now() + cost;
    while (std::chrono::steady_clock::now() < until) {
      // busy wait: models compute-bound background work
    }
  }

  bool solve_conj(std::span<const Term> goals, std::size_t i, int depth,
                  const Cont& k) {
    if (i == goals.size()) return k();
    return solve_goal(goals[i], depth,
                      [&] { return solve_conj(goals, i + 1, depth, k); });
  }

  bool solve_goal(const Term& goal, int depth, const Cont& k) {
    const Term& g = bindings.deref(goal);
    if (g.is_atom_named("true")) return k();
    if (g.is_compound() && is_builtin(g.name(), g.arity()))
      return solve_builtin(g, k);
    auto it = p.index_.find(functor_key(g));
    if (it == p.index_.end()) return false;
    for (const Clause* clause : it->second) {
      if (depth <= 0) {
        ++p.stats_.depth_exceeded;
        break;
      }
      std::size_t mark = bindings.mark();
      Clause rc = rename_apart(*clause, ++p.rename_serial_);
      if (unify(g, rc.head, bindings) &&
          solve_conj(rc.body, 0, depth - 1, k))
        return true;
      bindings.undo_to(mark);
    }
    return false;
  }

  bool solve_builtin(const Term& g, const Cont& k) {
    spin_cost();
    const std::string& name = g.name();
    std::size_t mark = bindings.mark();
    if (name == "is") {
      auto v = eval_arith(g.args()[1], bindings);
      if (v) {
        Term value = v->is_int ? Term::integer(v->i) : Term::real(v->d);
        if (unify(g.args()[0], value, bindings) && k()) return true;
      }
      bindings.undo_to(mark);
      return false;
    }
    if (name == "==") return equal_under(g.args()[0], g.args()[1], bindings) && k();
    auto lhs = eval_arith(g.args()[0], bindings);
    auto rhs = eval_arith(g.args()[1], bindings);
    if (!lhs || !rhs) return false;
    int cmp = compare_nums(*lhs, *rhs);
    bool ok = false;
    if (name == "=:=")
      ok = cmp == 0;
    else if (name == "<")
      ok = cmp < 0;
    else if (name == ">")
      ok = cmp > 0;
    else if (name == "=<")
      ok = cmp <= 0;
    else if (name == ">=")
      ok = cmp >= 0;
    return ok && k();
  }
};

Prover::Prover(Background background, int depth_limit)
    : bg_(std::move(background)), depth_limit_(depth_limit) {
  if (depth_limit_ < 1) throw std::invalid_argument("depth limit must be >= 1");
  for (const Clause& c : bg_.clauses) index_[functor_key(c.head)].push_back(&c);
}

bool Prover::prove(const Term& goal, const Clause& candidate) {
  Engine engine{*this, {}};
  Clause rc = rename_apart(candidate, ++rename_serial_);
  if (!unify(goal, rc.head, engine.bindings)) return false;
  return engine.solve_conj(rc.body, 0, depth_limit_, [] { return true; });
}

Coverage Prover::evaluate_local(const Clause& candidate, std::span<const Example> pos,
                                std::span<const Example> neg,
                                const IntervalSet& active_pos,
                                const IntervalSet& active_neg) {
  std::vector<std::int64_t> pos_ids;
  std::vector<std::int64_t> neg_ids;
  for (const Example& e : pos)
    if (active_pos.contains(e.id) && prove(e.goal, candidate)) pos_ids.push_back(e.id);
  for (const Example& e : neg)
    if (active_neg.contains(e.id) && prove(e.goal, candidate)) neg_ids.push_back(e.id);
  return {IntervalSet::from_ids(pos_ids), IntervalSet::from_ids(neg_ids)};
}

Coverage Prover::evaluate_local(const Clause& candidate, const Shard& pos,
                                const Shard& neg, const IntervalSet& active_pos,
                                const IntervalSet& active_neg) {
  return evaluate_local(candidate, pos.examples, neg.examples, active_pos, active_neg);
}

}  // namespace parcover
