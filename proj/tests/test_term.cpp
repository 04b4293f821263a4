#include <doctest.h>

#include <limits>

#include "parcover/term.hpp"
#include "support.hpp"

using namespace parcover;

TEST_SUITE("term") {

TEST_CASE("parse basic shapes") {
  Term t = parse_term("msg(file1, 'Hello World')");
  REQUIRE(t.is_functor("msg", 2));
  CHECK(t.args()[0] == Term::atom("file1"));
  CHECK(t.args()[1] == Term::atom("Hello World"));

  CHECK(parse_term("foo") == Term::atom("foo"));
  CHECK(parse_term("foo.") == Term::atom("foo"));
  CHECK(parse_term("X") == Term::var("X"));
  CHECK(parse_term("_tmp") == Term::var("_tmp"));
  CHECK(parse_term("42") == Term::integer(42));
  CHECK(parse_term("-7") == Term::integer(-7));
  CHECK(parse_term("3.5") == Term::real(3.5));
  CHECK(parse_term("1e-05") == Term::real(1e-05));
  CHECK(parse_term("-9223372036854775808") ==
        Term::integer(std::numeric_limits<std::int64_t>::min()));
}

TEST_CASE("lists desugar to cons cells") {
  Term t = parse_term("[1,2]");
  Term expected = Term::cons(
      Term::integer(1), Term::cons(Term::integer(2), Term::nil()));
  CHECK(t == expected);
  CHECK(parse_term("[]") == Term::nil());
  CHECK(parse_term("[a|T]") == Term::cons(Term::atom("a"), Term::var("T")));
  CHECK(print_term(parse_term("[a,b|T]")) == "[a,b|T]");
}

TEST_CASE("operators parse infix and reprint canonically") {
  Term clause = parse_term("target(N) :- odd(N), small(N).");
  REQUIRE(clause.is_functor(":-", 2));
  CHECK(print_term(clause) == "target(N):-odd(N),small(N)");

  CHECK(print_term(parse_term("f((a,b))")) == "f((a,b))");
  CHECK(print_term(parse_term("f((a:-b))")) == "f((a:-b))");
  CHECK(print_term(parse_term("(a,b),c")) == "(a,b),c");
  CHECK(print_term(parse_term("a,b,c")) == "a,b,c");
  // ':-' and ',' with the wrong arity fall back to functional notation
  CHECK(print_term(Term::compound(",", {Term::atom("a")})) == "','(a)");
}

TEST_CASE("quoting rules") {
  CHECK(print_term(Term::atom("Hello World")) == "'Hello World'");
  CHECK(print_term(Term::atom("it's")) == "'it''s'");
  CHECK(print_term(Term::atom("abc")) == "abc");
  CHECK(print_term(Term::atom("aBc_9")) == "aBc_9");
  CHECK(print_term(Term::atom("")) == "''");
  CHECK(print_term(Term::atom("[]")) == "[]");
  CHECK(print_term(Term::atom("<")) == "'<'");
  // '[]' as a functor must not lex as the empty list
  Term t = Term::compound("[]", {Term::integer(1)});
  CHECK(print_term(t) == "'[]'(1)");
  CHECK(parse_term(print_term(t)) == t);
}

TEST_CASE("canonical print examples") {
  Term t = Term::compound("f", {Term::var("X"), Term::integer(-3)});
  CHECK(print_term(t) == "f(X,-3)");
  CHECK(print_term(Term::real(10.0)) == "10.0");
  CHECK(print_term(Term::real(-0.0)) == "-0.0");
}

TEST_CASE("symbolic atoms accepted unquoted on input") {
  CHECK(parse_term("'<'(N,100)") == parse_term("<(N,100)"));
  CHECK(parse_term("'=:='(M,1)") == parse_term("=:=(M,1)"));
  CHECK(parse_term("-(3)") == Term::compound("-", {Term::integer(3)}));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(parse_term("f("), SyntaxError);
  CHECK_THROWS_AS(parse_term("f(a"), SyntaxError);
  CHECK_THROWS_AS(parse_term("'unterminated"), SyntaxError);
  CHECK_THROWS_AS(parse_term(""), SyntaxError);
  CHECK_THROWS_AS(parse_term("f(a) b"), TrailingGarbage);
  CHECK_THROWS_AS(parse_term("foo. bar"), TrailingGarbage);
  CHECK_THROWS_AS(parse_term("99999999999999999999"), SyntaxError);
  CHECK_THROWS_AS(Term::compound("f", {}), std::logic_error);
  try {
    parse_term("f(a,)");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("roundtrip property over random terms") {
  testsupport::TermGen gen(20260809);
  for (int i = 0; i < 1000; ++i) {
    Term t = gen.gen(6);
    std::string printed = print_term(t);
    CAPTURE(printed);
    Term back = parse_term(printed);
    REQUIRE(back == t);
    // canonicalisation is idempotent
    REQUIRE(print_term(back) == printed);
  }
}

TEST_CASE("ground check") {
  CHECK(parse_term("f(a,[1,2])").is_ground());
  CHECK_FALSE(parse_term("f(a,[1,X])").is_ground());
}

TEST_CASE("huge flat lists survive") {
  // deep right-nested cons spine: construction, print, parse, compare and
  // destruction must all avoid native recursion over the spine
  const int n = 150000;
  std::vector<Term> items;
  items.reserve(n);
  for (int i = 0; i < n; ++i) items.push_back(Term::integer(1000000 + i));
  Term big = Term::list(std::move(items));
  std::string printed = print_term(big);
  CHECK(printed.size() >= (1u << 20));
  Term back = parse_term(printed);
  CHECK(back == big);
}

}  // TEST_SUITE
