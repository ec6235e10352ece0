#pragma once

#include "bridge/sexpr.hpp"

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace bridge {

/// The JSON subset produced from S-expressions: no objects, and numbers
/// are always integers kept at full precision.
class JsonValue {
 public:
  struct Null {
    friend bool operator==(Null, Null) = default;
  };
  using Array = std::vector<JsonValue>;
  using Storage = std::variant<Null, bool, Integer, std::string, Array>;

  JsonValue() = default;
  JsonValue(Storage storage) : storage_(std::move(storage)) {}

  const Storage& storage() const noexcept { return storage_; }

  bool is_null() const noexcept { return std::holds_alternative<Null>(storage_); }
  bool is_bool() const noexcept { return std::holds_alternative<bool>(storage_); }
  bool is_number() const noexcept { return std::holds_alternative<Integer>(storage_); }
  bool is_string() const noexcept { return std::holds_alternative<std::string>(storage_); }
  bool is_array() const noexcept { return std::holds_alternative<Array>(storage_); }

  friend bool operator==(const JsonValue&, const JsonValue&) = default;

 private:
  Storage storage_;
};

/// Raised when a value contains a dotted (improper) pair, which JSON cannot
/// express.
class UnencodableValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NIL -> null, T -> true, integers -> numbers, strings -> strings, other
/// symbols -> their names as strings, proper lists -> arrays. Symbol and
/// string images can collide; there is no way back.
JsonValue sexpr_to_json(const SExpr& value);

/// Compact serialization: no insignificant whitespace, only mandatory
/// escapes (quote, backslash, control characters).
std::string serialize_json(const JsonValue& value);

/// Same text as serialize_json(sexpr_to_json(value)) without building the
/// intermediate tree. Iterative, so it copes with any nesting depth.
std::string sexpr_to_json_text(const SExpr& value);

/// True when the value has no improper pair anywhere inside it.
bool is_json_encodable(const SExpr& value);

}  // namespace bridge
