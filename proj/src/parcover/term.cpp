#include "parcover/term.hpp"

#include <cctype>
#include <charconv>
#include <cstring>
#include <utility>

namespace parcover {

namespace {

bool lower(char c) { return c >= 'a' && c <= 'z'; }
bool upper(char c) { return c >= 'A' && c <= 'Z'; }
bool digit(char c) { return c >= '0' && c <= '9'; }
bool ident_char(char c) { return lower(c) || upper(c) || digit(c) || c == '_'; }

bool symbolic_char(char c) {
  return std::strchr("#$&*+-/:<=>?@^~\\", c) != nullptr;
}

}  // namespace

Term::~Term() {
  // Flatten the teardown so a 100k-element list does not recurse 100k deep.
  if (args_.empty()) return;
  std::vector<Term> pending;
  for (auto& a : args_)
    if (!a.args_.empty()) pending.push_back(std::move(a));
  args_.clear();
  while (!pending.empty()) {
    Term t = std::move(pending.back());
    pending.pop_back();
    for (auto& a : t.args_)
      if (!a.args_.empty()) pending.push_back(std::move(a));
    t.args_.clear();
  }
}

Term Term::atom(std::string name) {
  Term t;
  t.kind_ = TermKind::Atom;
  t.text_ = std::move(name);
  return t;
}

Term Term::integer(std::int64_t value) {
  Term t;
  t.kind_ = TermKind::Int;
  t.text_.clear();
  t.int_ = value;
  return t;
}

Term Term::real(double value) {
  Term t;
  t.kind_ = TermKind::Float;
  t.text_.clear();
  t.float_ = value;
  return t;
}

Term Term::var(std::string name) {
  Term t;
  t.kind_ = TermKind::Var;
  t.text_ = std::move(name);
  return t;
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) throw std::logic_error("compound terms require arity >= 1");
  Term t;
  t.kind_ = TermKind::Compound;
  t.text_ = std::move(functor);
  t.args_ = std::move(args);
  return t;
}

Term Term::cons(Term head, Term tail) {
  std::vector<Term> a;
  a.reserve(2);
  a.push_back(std::move(head));
  a.push_back(std::move(tail));
  return compound(".", std::move(a));
}

Term Term::list(std::vector<Term> items) { return list(std::move(items), nil()); }

Term Term::list(std::vector<Term> items, Term tail) {
  Term acc = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    acc = cons(std::move(*it), std::move(acc));
  return acc;
}

bool Term::is_ground() const {
  std::vector<const Term*> stack{this};
  while (!stack.empty()) {
    const Term* t = stack.back();
    stack.pop_back();
    if (t->kind_ == TermKind::Var) return false;
    for (const auto& a : t->args_) stack.push_back(&a);
  }
  return true;
}

bool operator==(const Term& a, const Term& b) {
  std::vector<std::pair<const Term*, const Term*>> stack{{&a, &b}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    if (x->kind_ != y->kind_) return false;
    switch (x->kind_) {
      case TermKind::Atom:
      case TermKind::Var:
        if (x->text_ != y->text_) return false;
        break;
      case TermKind::Int:
        if (x->int_ != y->int_) return false;
        break;
      case TermKind::Float:
        if (x->float_ != y->float_) return false;
        break;
      case TermKind::Compound:
        if (x->text_ != y->text_ || x->args_.size() != y->args_.size()) return false;
        for (std::size_t i = 0; i < x->args_.size(); ++i)
          stack.emplace_back(&x->args_[i], &y->args_[i]);
        break;
    }
  }
  return true;
}

SyntaxError::SyntaxError(std::size_t position, std::string expected)
    : std::runtime_error("syntax error at offset " + std::to_string(position) +
                         ": expected " + expected),
      position_(position),
      expected_(std::move(expected)) {}

TrailingGarbage::TrailingGarbage(std::size_t position)
    : std::runtime_error("unconsumed input after term at offset " +
                         std::to_string(position)),
      position_(position) {}

// ---------------------------------------------------------------------------
// Printer

namespace {

bool atom_needs_quotes(std::string_view s) {
  if (s == "[]") return false;
  if (s.empty() || !lower(s[0])) return true;
  for (char c : s.substr(1))
    if (!ident_char(c)) return true;
  return false;
}

void print_quoted(std::string_view s, std::string& out) {
  out += '\'';
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
}

void print_atom_text(std::string_view s, std::string& out, bool functor_position) {
  bool quote = atom_needs_quotes(s);
  if (functor_position && s == "[]") quote = true;  // '[]'(x) must not lex as [ ]
  if (quote)
    print_quoted(s, out);
  else
    out.append(s);
}

void print_double(double v, std::string& out) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string_view s(buf, static_cast<std::size_t>(res.ptr - buf));
  out.append(s);
  // keep floats distinct from integers on reparse
  if (s.find_first_not_of("-0123456789") == std::string_view::npos) out += ".0";
}

struct Printer {
  std::string& out;

  // max_prec is the highest operator priority printable without parentheses
  // in the current context; ':-' is 1200 xfx, ',' is 1000 xfy, arguments 999.
  void print(const Term& t, int max_prec) {
    switch (t.kind()) {
      case TermKind::Atom:
        print_atom_text(t.name(), out, false);
        return;
      case TermKind::Int: {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, t.int_value());
        out.append(buf, res.ptr);
        return;
      }
      case TermKind::Float:
        print_double(t.float_value(), out);
        return;
      case TermKind::Var:
        out.append(t.name());
        return;
      case TermKind::Compound:
        break;
    }
    if (t.is_cons()) {
      print_list(t);
      return;
    }
    if (t.is_functor(":-", 2)) {
      print_infix(t, ":-", 1200, 1199, 1199, max_prec);
      return;
    }
    if (t.is_functor(",", 2)) {
      print_infix(t, ",", 1000, 999, 1000, max_prec);
      return;
    }
    print_atom_text(t.name(), out, true);
    out += '(';
    for (std::size_t i = 0; i < t.args().size(); ++i) {
      if (i) out += ',';
      print(t.args()[i], 999);
    }
    out += ')';
  }

  void print_infix(const Term& t, const char* op, int prec, int left_max,
                   int right_max, int max_prec) {
    bool wrap = prec > max_prec;
    if (wrap) out += '(';
    print(t.args()[0], left_max);
    out += op;
    std::size_t right_start = out.size();
    print(t.args()[1], right_max);
    // ':-' directly before a negative numeral would re-lex as ':--'
    if (symbolic_char(op[std::strlen(op) - 1]) && right_start < out.size() &&
        symbolic_char(out[right_start]))
      out.insert(right_start, 1, ' ');
    if (wrap) out += ')';
  }

  void print_list(const Term& cell) {
    out += '[';
    print(cell.args()[0], 999);
    const Term* tail = &cell.args()[1];
    for (;;) {
      if (tail->is_cons()) {
        out += ',';
        print(tail->args()[0], 999);
        tail = &tail->args()[1];
      } else if (tail->is_nil()) {
        break;
      } else {
        out += '|';
        print(*tail, 999);
        break;
      }
    }
    out += ']';
  }
};

}  // namespace

void print_term(const Term& t, std::string& out) { Printer{out}.print(t, 1200); }

std::string print_term(const Term& t) {
  std::string out;
  print_term(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok {
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Bar,
  Neck,
  End,
  Eof,
  Atom,
  Var,
  Int,
  Float
};

struct Token {
  Tok type = Tok::Eof;
  std::string text;
  std::int64_t ival = 0;
  double fval = 0.0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view in) : in_(in) {}

  Token next() {
    skip_layout();
    std::size_t start = pos_;
    if (pos_ >= in_.size()) return {Tok::Eof, "", 0, 0, start};
    char c = in_[pos_];
    switch (c) {
      case '(': ++pos_; return {Tok::LParen, "", 0, 0, start};
      case ')': ++pos_; return {Tok::RParen, "", 0, 0, start};
      case '[': ++pos_; return {Tok::LBracket, "", 0, 0, start};
      case ']': ++pos_; return {Tok::RBracket, "", 0, 0, start};
      case ',': ++pos_; return {Tok::Comma, "", 0, 0, start};
      case '|': ++pos_; return {Tok::Bar, "", 0, 0, start};
      default: break;
    }
    if (c == '.') {
      // a period terminates the term only when followed by layout or EOF
      if (pos_ + 1 >= in_.size() || std::isspace(static_cast<unsigned char>(in_[pos_ + 1])) ||
          in_[pos_ + 1] == '%') {
        ++pos_;
        return {Tok::End, "", 0, 0, start};
      }
      throw SyntaxError(start, "layout or end of input after '.'");
    }
    if (c == '\'') return quoted_atom(start);
    if (lower(c)) return ident(start, Tok::Atom);
    if (upper(c) || c == '_') return ident(start, Tok::Var);
    if (digit(c)) return number(start);
    if (c == '-' && pos_ + 1 < in_.size() && digit(in_[pos_ + 1])) {
      ++pos_;  // from_chars sees the sign: the span starts at '-'
      return number(start);
    }
    if (symbolic_char(c)) {
      std::size_t end = pos_;
      while (end < in_.size() && symbolic_char(in_[end])) ++end;
      std::string text(in_.substr(pos_, end - pos_));
      pos_ = end;
      if (text == ":-") return {Tok::Neck, "", 0, 0, start};
      return {Tok::Atom, std::move(text), 0, 0, start};
    }
    throw SyntaxError(start, "a term");
  }

 private:
  void skip_layout() {
    for (;;) {
      while (pos_ < in_.size() && std::isspace(static_cast<unsigned char>(in_[pos_]))) ++pos_;
      if (pos_ < in_.size() && in_[pos_] == '%') {
        while (pos_ < in_.size() && in_[pos_] != '\n') ++pos_;
        continue;
      }
      return;
    }
  }

  Token ident(std::size_t start, Tok type) {
    std::size_t end = pos_;
    while (end < in_.size() && ident_char(in_[end])) ++end;
    std::string text(in_.substr(pos_, end - pos_));
    pos_ = end;
    return {type, std::move(text), 0, 0, start};
  }

  Token quoted_atom(std::size_t start) {
    ++pos_;  // opening quote
    std::string text;
    while (pos_ < in_.size()) {
      char c = in_[pos_];
      if (c == '\'') {
        if (pos_ + 1 < in_.size() && in_[pos_ + 1] == '\'') {
          text += '\'';
          pos_ += 2;
          continue;
        }
        ++pos_;
        return {Tok::Atom, std::move(text), 0, 0, start};
      }
      text += c;
      ++pos_;
    }
    throw SyntaxError(start, "closing ' for quoted atom");
  }

  Token number(std::size_t start) {
    std::size_t end = pos_;
    while (end < in_.size() && digit(in_[end])) ++end;
    bool is_float = false;
    if (end + 1 < in_.size() && in_[end] == '.' && digit(in_[end + 1])) {
      is_float = true;
      ++end;
      while (end < in_.size() && digit(in_[end])) ++end;
    }
    if (end < in_.size() && (in_[end] == 'e' || in_[end] == 'E')) {
      std::size_t exp = end + 1;
      if (exp < in_.size() && (in_[exp] == '+' || in_[exp] == '-')) ++exp;
      if (exp < in_.size() && digit(in_[exp])) {
        is_float = true;
        end = exp;
        while (end < in_.size() && digit(in_[end])) ++end;
      }
    }
    const char* first = in_.data() + start;
    const char* last = in_.data() + end;
    Token t;
    t.pos = start;
    if (is_float) {
      t.type = Tok::Float;
      auto res = std::from_chars(first, last, t.fval);
      if (res.ec != std::errc() || res.ptr != last)
        throw SyntaxError(start, "a float literal");
    } else {
      t.type = Tok::Int;
      auto res = std::from_chars(first, last, t.ival);
      if (res.ec == std::errc::result_out_of_range)
        throw SyntaxError(start, "an integer within 64 bits");
      if (res.ec != std::errc() || res.ptr != last)
        throw SyntaxError(start, "an integer literal");
    }
    pos_ = end;
    return t;
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view in) : lex_(in) { cur_ = lex_.next(); }

  Term parse_whole() {
    Term t = parse_clause_level();
    if (cur_.type == Tok::End) advance();
    if (cur_.type != Tok::Eof) throw TrailingGarbage(cur_.pos);
    return t;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  void expect(Tok type, const char* what) {
    if (cur_.type != type) throw SyntaxError(cur_.pos, what);
    advance();
  }

  // ':-' level (xfx 1200)
  Term parse_clause_level() {
    Term left = parse_conjunction();
    if (cur_.type == Tok::Neck) {
      advance();
      Term right = parse_conjunction();
      std::vector<Term> args;
      args.reserve(2);
      args.push_back(std::move(left));
      args.push_back(std::move(right));
      return Term::compound(":-", std::move(args));
    }
    return left;
  }

  // ',' level (xfy 1000)
  Term parse_conjunction() {
    Term left = parse_primary();
    if (cur_.type == Tok::Comma) {
      advance();
      Term right = parse_conjunction();
      std::vector<Term> args;
      args.reserve(2);
      args.push_back(std::move(left));
      args.push_back(std::move(right));
      return Term::compound(",", std::move(args));
    }
    return left;
  }

  Term parse_primary() {
    switch (cur_.type) {
      case Tok::LParen: {
        advance();
        Term t = parse_clause_level();
        expect(Tok::RParen, "')'");
        return t;
      }
      case Tok::LBracket:
        advance();
        return parse_list();
      case Tok::Int: {
        Term t = Term::integer(cur_.ival);
        advance();
        return t;
      }
      case Tok::Float: {
        Term t = Term::real(cur_.fval);
        advance();
        return t;
      }
      case Tok::Var: {
        Term t = Term::var(std::move(cur_.text));
        advance();
        return t;
      }
      case Tok::Atom: {
        std::string name = std::move(cur_.text);
        advance();
        if (cur_.type == Tok::LParen) {
          advance();
          std::vector<Term> args = parse_arg_list();
          return Term::compound(std::move(name), std::move(args));
        }
        return Term::atom(std::move(name));
      }
      default:
        throw SyntaxError(cur_.pos, "a term");
    }
  }

  std::vector<Term> parse_arg_list() {
    std::vector<Term> args;
    for (;;) {
      args.push_back(parse_primary());
      if (cur_.type == Tok::Comma) {
        advance();
        continue;
      }
      expect(Tok::RParen, "',' or ')'");
      return args;
    }
  }

  Term parse_list() {
    if (cur_.type == Tok::RBracket) {
      advance();
      return Term::nil();
    }
    std::vector<Term> items;
    items.push_back(parse_primary());
    while (cur_.type == Tok::Comma) {
      advance();
      items.push_back(parse_primary());
    }
    Term tail = Term::nil();
    if (cur_.type == Tok::Bar) {
      advance();
      tail = parse_primary();
    }
    expect(Tok::RBracket, "']'");
    return Term::list(std::move(items), std::move(tail));
  }

  Lexer lex_;
  Token cur_;
};

}  // namespace

Term parse_term(std::string_view input) { return Parser(input).parse_whole(); }

}  // namespace parcover
