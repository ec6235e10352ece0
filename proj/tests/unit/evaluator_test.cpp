#include "bridge/evaluator.hpp"

#include "test_support.hpp"

#include <doctest.h>

using bridge::CommandOutcome;
using bridge::parse_sexpr;
using bridge::print_sexpr;
using bridge::SExpr;
using bridge::Session;

namespace {

struct Run {
  CommandOutcome outcome;
  std::vector<std::string> emitted;
};

Run run(Session& session, std::string_view text) {
  Run r;
  r.outcome = session.evaluate_command(parse_sexpr(text), [&r](std::string_view chunk) {
    r.emitted.emplace_back(chunk);
  });
  return r;
}

std::string value_of(Session& session, std::string_view text) {
  Run r = run(session, text);
  REQUIRE_MESSAGE(r.outcome.returned(), text << " -> " << r.outcome.error_message);
  return print_sexpr(r.outcome.value);
}

std::string error_of(Session& session, std::string_view text) {
  Run r = run(session, text);
  REQUIRE_MESSAGE(!r.outcome.returned(), text << " unexpectedly returned " << print_sexpr(r.outcome.value));
  return r.outcome.error_message;
}

}  // namespace

TEST_CASE("arithmetic returns without output") {
  Session s;
  Run r = run(s, "(+ 1 2)");
  CHECK(r.outcome.returned());
  CHECK(print_sexpr(r.outcome.value) == "3");
  CHECK(r.outcome.printed_chunks.empty());
  CHECK(r.emitted.empty());
  CHECK(value_of(s, "(+)") == "0");
  CHECK(value_of(s, "(*)") == "1");
  CHECK(value_of(s, "(- 5)") == "-5");
  CHECK(value_of(s, "(- 10 1 2 3)") == "4");
  CHECK(value_of(s, "(* 99999999999 99999999999 99999999999)") == "999999999970000000000299999999999");
}

TEST_CASE("cw substitutes ~a and emits one chunk per call") {
  Session s;
  // "hi ~a!" with 5: the directive becomes the printed 5, so "hi 5!".
  Run r = run(s, "(cw \"hi ~a!\" 5)");
  CHECK(r.outcome.returned());
  CHECK(r.outcome.value.is_nil());
  CHECK(r.outcome.printed_chunks == std::vector<std::string>{"hi 5!"});
  CHECK(r.emitted == r.outcome.printed_chunks);

  Run multi = run(s, "(progn (cw \"a~%\") (cw \"~a and ~a\" \"s\" (list 1 2)) (cw \"\"))");
  CHECK(multi.outcome.printed_chunks == std::vector<std::string>{"a\n", "\"s\" and (1 2)", ""});
  CHECK(multi.outcome.printed_output() == "a\n\"s\" and (1 2)");
}

TEST_CASE("cw misuse is an error") {
  Session s;
  CHECK(error_of(s, "(cw 5)").find("control string") != std::string::npos);
  CHECK(error_of(s, "(cw \"~a\")").find("not enough arguments") != std::string::npos);
  CHECK(error_of(s, "(cw \"~q\" 1)").find("unsupported directive ~q") != std::string::npos);
  CHECK(error_of(s, "(cw \"x~\")").find("ends with") != std::string::npos);
}

TEST_CASE("type errors name the builtin and the value") {
  Session s;
  const std::string msg = error_of(s, "(car 5)");
  CHECK(msg.find("car") != std::string::npos);
  CHECK(msg.find('5') != std::string::npos);
  CHECK(error_of(s, "(+ 1 \"a\")") == "+: expected an integer, got \"a\"");
  CHECK(error_of(s, "(< 1 b)") == "unbound symbol: b");
  CHECK(error_of(s, "(< 1 (quote b))").find("<: expected an integer") != std::string::npos);
}

TEST_CASE("list primitives") {
  Session s;
  CHECK(value_of(s, "(car (quote (1 2)))") == "1");
  CHECK(value_of(s, "(cdr (quote (1 2)))") == "(2)");
  CHECK(value_of(s, "(car NIL)") == "NIL");
  CHECK(value_of(s, "(cdr ())") == "NIL");
  CHECK(value_of(s, "(cons 1 2)") == "(1 . 2)");
  CHECK(value_of(s, "(list 1 (list 2) \"x\")") == "(1 (2) \"x\")");
  CHECK(value_of(s, "(list)") == "NIL");
  CHECK(value_of(s, "(equal (list 1 2) (quote (1 2)))") == "T");
  CHECK(value_of(s, "(equal 1 2)") == "NIL");
  CHECK(value_of(s, "(< 1 2)") == "T");
  CHECK(value_of(s, "(< 2 1)") == "NIL");
}

TEST_CASE("special forms") {
  Session s;
  CHECK(value_of(s, "(quote (a . b))") == "(a . b)");
  CHECK(value_of(s, "(if NIL 1 2)") == "2");
  CHECK(value_of(s, "(if 0 1 2)") == "1");
  CHECK(value_of(s, "(if NIL 1)") == "NIL");
  CHECK(value_of(s, "(progn)") == "NIL");
  CHECK(value_of(s, "(progn 1 2 3)") == "3");
  CHECK(value_of(s, "((lambda (x y) (+ x y)) 1 2)") == "3");
  CHECK(value_of(s, "(lambda (x) x)") == "(lambda (x) x)");
  CHECK(value_of(s, "(defun sq (x) (* x x))") == "sq");
  CHECK(value_of(s, "(sq 12)") == "144");
  CHECK(value_of(s, "(setq g (lambda (x) (+ x 1)))") == "(lambda (x) (+ x 1))");
  CHECK(value_of(s, "(g 41)") == "42");
  CHECK(value_of(s, "\"str\"") == "\"str\"");
  CHECK(value_of(s, "T") == "T");
}

TEST_CASE("recursive definitions and big integers") {
  Session s;
  value_of(s, "(defun fact (n) (if (< n 1) 1 (* n (fact (- n 1)))))");
  CHECK(value_of(s, "(fact 20)") == "2432902008176640000");
  CHECK(value_of(s, "(fact 30)") == "265252859812191058636308480000000");
}

TEST_CASE("malformed forms and arity") {
  Session s;
  CHECK(error_of(s, "(quote)") == "quote: expected 1 argument, got 0");
  CHECK(error_of(s, "(if 1)") == "if: expected 2 to 3 arguments, got 1");
  CHECK(error_of(s, "(cons 1)") == "cons: expected 2 arguments, got 1");
  CHECK(error_of(s, "(-)") == "-: expected at least 1 arguments, got 0");
  CHECK(error_of(s, "(+ 1 . 2)").find("malformed form") != std::string::npos);
  CHECK(error_of(s, "(1 2)") == "not a function: 1");
  CHECK(error_of(s, "(nosuch 1)") == "unbound symbol: nosuch");
  value_of(s, "(setq v 3)");
  CHECK(error_of(s, "(v 1)") == "not a function: v");
  value_of(s, "(defun two (a b) a)");
  CHECK(error_of(s, "(two 1)") == "two: expected 2 arguments, got 1");
  CHECK(error_of(s, "(setq T 1)") == "setq: cannot assign to T");
  CHECK(error_of(s, "(setq car 1)") == "setq: cannot assign to car");
  CHECK(error_of(s, "(defun cw (x) x)") == "defun: cannot redefine cw");
  CHECK(error_of(s, "(defun f (x x) x)") == "defun: duplicate parameter x");
  CHECK(error_of(s, "(lambda (1) x)") == "lambda: invalid parameter 1");
}

TEST_CASE("explicit error calls") {
  Session s;
  CHECK(error_of(s, "(error \"boom\")") == "boom");
  CHECK(error_of(s, "(error \"bad ~a\" (list 1 2))") == "bad (1 2)");
  CHECK(error_of(s, "(error (quote oops))") == "oops");
  CHECK(error_of(s, "(error \"two~%lines\")") == "two lines");
}

TEST_CASE("globals are shared across commands") {
  Session s;
  // Two-command script, checked against the expected serial semantics.
  CHECK(value_of(s, "(progn (setq x 7) x)") == "7");
  CHECK(value_of(s, "x") == "7");
  CHECK(print_sexpr(s.globals().at("x")) == "7");
}

TEST_CASE("errored commands never mutate globals") {
  Session s;
  value_of(s, "(setq keep 1)");
  error_of(s, "(progn (setq keep 2) (setq fresh 3) (defun f2 () 1) (car 5))");
  CHECK(value_of(s, "keep") == "1");
  CHECK(error_of(s, "fresh") == "unbound symbol: fresh");
  CHECK(error_of(s, "(f2)") == "unbound symbol: f2");
}

TEST_CASE("locals shadow globals and setq on a parameter stays local") {
  Session s;
  value_of(s, "(setq x 100)");
  value_of(s, "(defun bump (x) (progn (setq x (+ x 1)) x))");
  CHECK(value_of(s, "(bump 1)") == "2");
  CHECK(value_of(s, "x") == "100");
  value_of(s, "(defun setg (v) (setq y v))");
  CHECK(value_of(s, "(setg 9)") == "9");
  CHECK(value_of(s, "y") == "9");
}

TEST_CASE("recursion depth is capped and the session survives") {
  Session s;
  value_of(s, "(defun loop (n) (loop n))");
  CHECK(error_of(s, "(loop 1)") == "recursion depth limit of 10000 exceeded");
  value_of(s, "(defun count (n) (if (< n 1) 0 (+ 1 (count (- n 1)))))");
  CHECK(value_of(s, "(count 3000)") == "3000");
  CHECK(value_of(s, "(+ 1 2)") == "3");
}

TEST_CASE("output printed before an error is still reported") {
  Session s;
  Run r = run(s, "(progn (cw \"before\") (car 1))");
  CHECK(!r.outcome.returned());
  CHECK(r.outcome.printed_chunks == std::vector<std::string>{"before"});
  CHECK(r.emitted == r.outcome.printed_chunks);
}

namespace {

// Commands drawn from a small pool; some fail, some print, some mutate.
std::string random_command(bridge::testing::Generator& gen) {
  const std::string var = "v" + std::to_string(gen.below(5));
  const std::string n = std::to_string(gen.below(100));
  switch (gen.below(7)) {
    case 0: return "(setq " + var + " " + n + ")";
    case 1: return "(setq " + var + " (+ " + n + " 1))";
    case 2: return "(progn (setq " + var + " " + n + ") (car " + n + "))";
    case 3: return "(cw \"~a=~a~%\" (quote " + var + ") " + n + ")";
    case 4: return "(progn (defun fn" + n + " (a) (* a " + n + ")) (fn" + n + " 2))";
    case 5: return "(error \"failed ~a\" " + n + ")";
    default: return "(list " + var + " " + n + ")";
  }
}

}  // namespace

TEST_CASE("property: determinism over fresh sessions") {
  bridge::testing::Generator gen(7);
  std::vector<std::string> script;
  for (int i = 0; i < 400; ++i) script.push_back(random_command(gen));
  Session a, b;
  for (const auto& cmd : script) {
    Run ra = run(a, cmd);
    Run rb = run(b, cmd);
    REQUIRE(ra.outcome.status == rb.outcome.status);
    REQUIRE(ra.outcome.value == rb.outcome.value);
    REQUIRE(ra.outcome.error_message == rb.outcome.error_message);
    REQUIRE(ra.outcome.printed_chunks == rb.outcome.printed_chunks);
    REQUIRE(ra.emitted == ra.outcome.printed_chunks);
  }
}

TEST_CASE("property: dropping errored commands leaves the same globals") {
  bridge::testing::Generator gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    Session full, filtered;
    for (int i = 0; i < 60; ++i) {
      const std::string cmd = random_command(gen);
      Run r = run(full, cmd);
      if (r.outcome.returned()) run(filtered, cmd);
    }
    REQUIRE(full.globals().size() == filtered.globals().size());
    for (const auto& [name, value] : full.globals()) {
      REQUIRE(filtered.globals().count(name) == 1);
      REQUIRE(filtered.globals().at(name) == value);
    }
  }
}
