#include "bridge/json_bridge.hpp"

#include <string_view>

namespace bridge {

namespace {

void append_json_string(std::string& out, std::string_view text) {
  static constexpr char kHex[] = "0123456789abcdef";
  out.push_back('"');
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out.push_back(kHex[c >> 4]);
          out.push_back(kHex[c & 0xF]);
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
}

[[noreturn]] void reject(const SExpr& pair) {
  std::string text = print_sexpr(pair);
  if (text.size() > 120) text = text.substr(0, 120) + "...";
  throw UnencodableValue("cannot encode improper list as JSON: " + text);
}

void append_atom(std::string& out, const SExpr& value) {
  switch (value.kind()) {
    case SExpr::Kind::Integer:
      out += value.as_integer().str();
      break;
    case SExpr::Kind::String:
      append_json_string(out, value.as_string());
      break;
    case SExpr::Kind::Symbol:
      if (value.is_nil()) {
        out += "null";
      } else if (value.is_symbol("T")) {
        out += "true";
      } else {
        append_json_string(out, value.symbol_name());
      }
      break;
    case SExpr::Kind::Pair:
      break;
  }
}

}  // namespace

bool is_json_encodable(const SExpr& value) {
  std::vector<const SExpr*> work{&value};
  while (!work.empty()) {
    const SExpr* cur = work.back();
    work.pop_back();
    if (!cur->is_pair()) continue;
    while (cur->is_pair()) {
      work.push_back(&cur->car());
      cur = &cur->cdr();
    }
    if (!cur->is_nil()) return false;
  }
  return true;
}

JsonValue sexpr_to_json(const SExpr& value) {
  switch (value.kind()) {
    case SExpr::Kind::Integer:
      return JsonValue::Storage{value.as_integer()};
    case SExpr::Kind::String:
      return JsonValue::Storage{value.as_string()};
    case SExpr::Kind::Symbol:
      if (value.is_nil()) return JsonValue{};
      if (value.is_symbol("T")) return JsonValue::Storage{true};
      return JsonValue::Storage{value.symbol_name()};
    case SExpr::Kind::Pair:
      break;
  }
  if (!value.is_proper_list()) reject(value);
  JsonValue::Array items;
  for (const SExpr* cur = &value; cur->is_pair(); cur = &cur->cdr()) items.push_back(sexpr_to_json(cur->car()));
  return JsonValue::Storage{std::move(items)};
}

std::string serialize_json(const JsonValue& value) {
  struct Visitor {
    std::string& out;
    void operator()(JsonValue::Null) const { out += "null"; }
    void operator()(bool b) const { out += b ? "true" : "false"; }
    void operator()(const Integer& n) const { out += n.str(); }
    void operator()(const std::string& s) const { append_json_string(out, s); }
    void operator()(const JsonValue::Array& items) const {
      out.push_back('[');
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i != 0) out.push_back(',');
        std::visit(*this, items[i].storage());
      }
      out.push_back(']');
    }
  };
  std::string out;
  std::visit(Visitor{out}, value.storage());
  return out;
}

std::string sexpr_to_json_text(const SExpr& value) {
  struct Item {
    const SExpr* value;
    std::string_view text;
  };
  std::string out;
  std::vector<Item> work{{&value, {}}};
  std::vector<const SExpr*> elements;
  while (!work.empty()) {
    Item item = work.back();
    work.pop_back();
    if (item.value == nullptr) {
      out += item.text;
      continue;
    }
    if (!item.value->is_pair()) {
      append_atom(out, *item.value);
      continue;
    }
    elements.clear();
    const SExpr* cur = item.value;
    while (cur->is_pair()) {
      elements.push_back(&cur->car());
      cur = &cur->cdr();
    }
    if (!cur->is_nil()) reject(*item.value);
    out.push_back('[');
    work.push_back({nullptr, "]"});
    for (std::size_t i = elements.size(); i-- > 0;) {
      work.push_back({elements[i], {}});
      if (i != 0) work.push_back({nullptr, ","});
    }
  }
  return out;
}

}  // namespace bridge
