#include "bridge/sexpr.hpp"

#include "test_support.hpp"

#include <doctest.h>

using bridge::Integer;
using bridge::make_list;
using bridge::parse_sexpr;
using bridge::print_sexpr;
using bridge::SExpr;
using bridge::SyntaxError;

namespace {

std::size_t syntax_error_offset(std::string_view text) {
  try {
    parse_sexpr(text);
  } catch (const SyntaxError& e) {
    return e.offset();
  }
  FAIL("expected a syntax error for: " << text);
  return 0;
}

}  // namespace

TEST_CASE("parse: simple call") {
  const SExpr expected = SExpr::cons(
      SExpr::symbol("+"), SExpr::cons(SExpr::integer(1), SExpr::cons(SExpr::integer(2), SExpr::nil())));
  CHECK(parse_sexpr("(+ 1 2)") == expected);
  CHECK(parse_sexpr("  (+\t1\n2 )  ") == expected);
}

TEST_CASE("parse: empty list is NIL") {
  CHECK(parse_sexpr("()").is_nil());
  CHECK(parse_sexpr("( )") == SExpr::nil());
  CHECK(parse_sexpr("NIL").is_nil());
}

TEST_CASE("parse: dotted pairs") {
  CHECK(parse_sexpr("(1 . 2)") == SExpr::cons(SExpr::integer(1), SExpr::integer(2)));
  CHECK(parse_sexpr("(1 2 . 3)") ==
        SExpr::cons(SExpr::integer(1), SExpr::cons(SExpr::integer(2), SExpr::integer(3))));
  CHECK(parse_sexpr("(1 . (2 3))") == make_list({SExpr::integer(1), SExpr::integer(2), SExpr::integer(3)}));
  CHECK(parse_sexpr("(a .b)") == make_list({SExpr::symbol("a"), SExpr::symbol(".b")}));
}

TEST_CASE("parse: atoms") {
  CHECK(parse_sexpr("-42") == SExpr::integer(-42));
  CHECK(parse_sexpr("007") == SExpr::integer(7));
  CHECK(parse_sexpr("-0") == SExpr::integer(0));
  CHECK(parse_sexpr("123456789012345678901234567890").as_integer() == Integer("123456789012345678901234567890"));
  CHECK(parse_sexpr("-").is_symbol("-"));
  CHECK(parse_sexpr("1+").is_symbol("1+"));
  CHECK(parse_sexpr("Foo").symbol_name() == "Foo");
  CHECK(parse_sexpr("foo") != parse_sexpr("FOO"));
  CHECK(parse_sexpr(R"("a\"b\\c")").as_string() == "a\"b\\c");
  CHECK(parse_sexpr("\"line\nbreak\"").as_string() == "line\nbreak");
  CHECK(parse_sexpr("\"\xE2\x82\xAC\"").as_string() == "\xE2\x82\xAC");
}

TEST_CASE("parse: errors carry offsets") {
  CHECK(syntax_error_offset("(") == 1);
  CHECK(syntax_error_offset("") == 0);
  CHECK(syntax_error_offset("   ") == 3);
  CHECK(syntax_error_offset(")") == 0);
  CHECK(syntax_error_offset("(a))") == 3);
  CHECK(syntax_error_offset("\"abc") == 4);
  CHECK(syntax_error_offset("( . a)") == 2);
  CHECK(syntax_error_offset("(a . )") == 5);
  CHECK(syntax_error_offset("(a . b c)") == 7);
  CHECK(syntax_error_offset("(a . . b)") == 5);
  CHECK(syntax_error_offset(".") == 0);
  CHECK(syntax_error_offset("1 2") == 2);
  CHECK(syntax_error_offset(R"("\n")") == 1);
  CHECK(syntax_error_offset("(a \xFF)") == 3);
}

TEST_CASE("print: canonical forms") {
  CHECK(print_sexpr(SExpr::cons(SExpr::integer(1), SExpr::integer(2))) == "(1 . 2)");
  CHECK(print_sexpr(SExpr::nil()) == "NIL");
  CHECK(print_sexpr(make_list({SExpr::symbol("cw"), SExpr::string("hi")})) == "(cw \"hi\")");
  CHECK(print_sexpr(parse_sexpr("(1 2 . 3)")) == "(1 2 . 3)");
  CHECK(print_sexpr(parse_sexpr("( ( ) (a) )")) == "(NIL (a))");
  CHECK(print_sexpr(SExpr::string("q\"b\\")) == R"("q\"b\\")");
  CHECK(print_sexpr(SExpr::integer(Integer("-99999999999999999999999"))) == "-99999999999999999999999");
}

TEST_CASE("symbol names are validated") {
  CHECK_THROWS_AS(SExpr::symbol(""), std::invalid_argument);
  CHECK_THROWS_AS(SExpr::symbol("a b"), std::invalid_argument);
  CHECK_THROWS_AS(SExpr::symbol("("), std::invalid_argument);
  CHECK_THROWS_AS(SExpr::symbol("."), std::invalid_argument);
  CHECK_THROWS_AS(SExpr::symbol("12"), std::invalid_argument);
  CHECK_THROWS_AS(SExpr::symbol("-3"), std::invalid_argument);
  CHECK(SExpr::symbol("NIL").is_nil());
  CHECK(SExpr::symbol("a.b").symbol_name() == "a.b");
}

TEST_CASE("property: print then parse is the identity") {
  bridge::testing::Generator gen(0x5eed);
  for (int i = 0; i < 10'000; ++i) {
    const SExpr x = gen.tree(8);
    const std::string text = print_sexpr(x);
    const SExpr back = parse_sexpr(text);
    REQUIRE_MESSAGE(back == x, text);
    // Printing is deterministic, so equal prints imply equal values.
    REQUIRE(print_sexpr(back) == text);
  }
}

TEST_CASE("property: proper prefixes of printed lists are rejected") {
  bridge::testing::Generator gen(42);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const SExpr x = gen.tree(4);
    if (!x.is_pair()) continue;
    const std::string text = print_sexpr(x);
    for (std::size_t len = 0; len < text.size(); ++len) {
      CHECK_THROWS_AS(parse_sexpr(std::string_view(text).substr(0, len)), SyntaxError);
    }
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("deep and long structures do not recurse") {
  constexpr int kDepth = 200'000;
  const std::string nested = std::string(kDepth, '(') + std::string(kDepth, ')');
  {
    const SExpr deep = parse_sexpr(nested);
    CHECK(print_sexpr(deep) == std::string(kDepth - 1, '(') + "NIL" + std::string(kDepth - 1, ')'));
    CHECK(deep == parse_sexpr(nested));
  }
  std::string long_list = "(";
  for (int i = 0; i < kDepth; ++i) long_list += "1 ";
  long_list += ")";
  const SExpr list = parse_sexpr(long_list);
  CHECK(list.is_proper_list());
}

TEST_CASE("values are equal structurally, not by identity") {
  CHECK(parse_sexpr("(a \"s\" 1)") == make_list({SExpr::symbol("a"), SExpr::string("s"), SExpr::integer(1)}));
  CHECK(SExpr::string("a") != SExpr::symbol("a"));
  CHECK(SExpr::integer(1) != SExpr::string("1"));
  CHECK(parse_sexpr("(1 . 2)") != parse_sexpr("(1 2)"));
}
