#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace parcover {

enum class TermKind { Atom, Int, Float, Var, Compound };

/// Prolog-style term. Atoms, 64-bit integers, doubles, named variables and
/// compounds; lists are './2' chains ending in the atom '[]'. Values are
/// immutable once built and freely copyable; very long lists are handled
/// without deep native recursion (construction, comparison, printing and
/// destruction are all iterative over the list spine).
class Term {
 public:
  Term() : kind_(TermKind::Atom), text_("[]") {}
  ~Term();
  Term(const Term&) = default;
  Term(Term&&) noexcept = default;
  Term& operator=(const Term&) = default;
  Term& operator=(Term&&) noexcept = default;

  static Term atom(std::string name);
  static Term integer(std::int64_t value);
  static Term real(double value);
  static Term var(std::string name);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term nil() { return Term(); }
  static Term cons(Term head, Term tail);
  static Term list(std::vector<Term> items);
  static Term list(std::vector<Term> items, Term tail);

  TermKind kind() const { return kind_; }
  bool is_atom() const { return kind_ == TermKind::Atom; }
  bool is_int() const { return kind_ == TermKind::Int; }
  bool is_float() const { return kind_ == TermKind::Float; }
  bool is_var() const { return kind_ == TermKind::Var; }
  bool is_compound() const { return kind_ == TermKind::Compound; }

  /// Atom or variable name, or compound functor.
  const std::string& name() const { return text_; }
  std::int64_t int_value() const { return int_; }
  double float_value() const { return float_; }
  const std::vector<Term>& args() const { return args_; }
  std::size_t arity() const { return args_.size(); }

  bool is_atom_named(std::string_view n) const {
    return kind_ == TermKind::Atom && text_ == n;
  }
  bool is_nil() const { return is_atom_named("[]"); }
  bool is_cons() const {
    return kind_ == TermKind::Compound && args_.size() == 2 && text_ == ".";
  }
  bool is_functor(std::string_view f, std::size_t n) const {
    return kind_ == TermKind::Compound && args_.size() == n && text_ == f;
  }

  bool is_ground() const;

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

 private:
  TermKind kind_;
  std::string text_;
  std::int64_t int_ = 0;
  double float_ = 0.0;
  std::vector<Term> args_;
};

/// Malformed term text. `position` is the byte offset of the offending
/// token, `expected` a short description of what would have been legal.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t position, std::string expected);
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

/// A complete term was parsed but tokens remain.
class TrailingGarbage : public std::runtime_error {
 public:
  explicit TrailingGarbage(std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses one term. Accepts an optional trailing period; anything else left
/// over raises TrailingGarbage. ':-'/2 and ','/2 may be written infix; all
/// other functors use canonical functional notation.
Term parse_term(std::string_view input);

/// Canonical text form: functor(arg,...) with no spaces, lists in bracket
/// notation, ':-' and ',' infix with minimal parenthesisation, atoms quoted
/// exactly when they do not match [a-z][A-Za-z0-9_]* (quotes doubled inside).
/// parse_term(print_term(t)) is structurally equal to t for well-formed t.
std::string print_term(const Term& t);
void print_term(const Term& t, std::string& out);

}  // namespace parcover
