#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bridge {

using Integer = boost::multiprecision::cpp_int;

/// Immutable symbolic expression: an integer, string, symbol or pair.
///
/// Values share structure through reference-counted nodes and are safe to
/// copy and hand across threads. The symbol `NIL` is also the empty list and
/// the default-constructed value. Destruction, printing and comparison are
/// iterative, so arbitrarily deep or long trees are fine.
class SExpr {
 public:
  enum class Kind { Integer, String, Symbol, Pair };

  SExpr();  // NIL

  static SExpr integer(Integer value);
  static SExpr string(std::string text);
  /// Throws std::invalid_argument when `name` could not be read back as a
  /// symbol (empty, contains whitespace/parens/quote, a lone dot, or looks
  /// like an integer).
  static SExpr symbol(std::string name);
  static SExpr cons(SExpr car, SExpr cdr);
  static SExpr nil();
  static SExpr t();

  Kind kind() const noexcept;
  bool is_integer() const noexcept { return kind() == Kind::Integer; }
  bool is_string() const noexcept { return kind() == Kind::String; }
  bool is_symbol() const noexcept { return kind() == Kind::Symbol; }
  bool is_pair() const noexcept { return kind() == Kind::Pair; }
  bool is_nil() const noexcept;
  bool is_symbol(std::string_view name) const noexcept;

  // Accessors throw std::logic_error on a kind mismatch.
  const Integer& as_integer() const;
  const std::string& as_string() const;
  const std::string& symbol_name() const;
  const SExpr& car() const;
  const SExpr& cdr() const;

  /// True for NIL and for pair chains that end in NIL.
  bool is_proper_list() const noexcept;

  friend bool operator==(const SExpr& a, const SExpr& b);
  friend bool operator!=(const SExpr& a, const SExpr& b) { return !(a == b); }

  struct Node;

 private:
  explicit SExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Builds a proper list from its elements.
SExpr make_list(std::initializer_list<SExpr> items);

/// True if `name` satisfies the symbol-name rules used by SExpr::symbol.
bool is_valid_symbol_name(std::string_view name) noexcept;

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, std::string reason);

  std::size_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t offset_;
  std::string reason_;
};

/// Reads exactly one S-expression from `text`. Surrounding whitespace is
/// allowed; anything else after the expression is an error. Input must be
/// valid UTF-8.
SExpr parse_sexpr(std::string_view text);

/// Single-line canonical form; parse_sexpr(print_sexpr(x)) == x.
std::string print_sexpr(const SExpr& value);

}  // namespace bridge
