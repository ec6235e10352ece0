#include "bridge/sexpr.hpp"

#include "utf8.hpp"

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace bridge {

namespace {

struct StringAtom {
  std::string text;
};
struct SymbolAtom {
  std::string name;
};

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_delimiter(char c) noexcept { return is_space(c) || c == '(' || c == ')' || c == '"'; }

bool looks_like_integer(std::string_view token) noexcept {
  if (!token.empty() && token.front() == '-') token.remove_prefix(1);
  if (token.empty()) return false;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Decimal only: cpp_int's string constructor would read "010" as octal.
Integer decimal_integer(std::string_view token) {
  const bool negative = token.front() == '-';
  if (negative) token.remove_prefix(1);
  const auto first = token.find_first_not_of('0');
  token = first == std::string_view::npos ? std::string_view("0") : token.substr(first);
  Integer value{std::string(token)};
  return negative ? Integer(-value) : value;
}

}  // namespace

struct PairCell {
  SExpr car;
  SExpr cdr;
};

struct SExpr::Node {
  std::variant<Integer, StringAtom, SymbolAtom, PairCell> data;

  explicit Node(Integer v) : data(std::move(v)) {}
  explicit Node(StringAtom v) : data(std::move(v)) {}
  explicit Node(SymbolAtom v) : data(std::move(v)) {}
  explicit Node(PairCell v) : data(std::move(v)) {}

  // Long cdr chains and deep car nests would otherwise recurse once per
  // node on destruction. Uniquely owned children are unlinked onto an
  // explicit worklist instead.
  ~Node() {
    auto* cell = std::get_if<PairCell>(&data);
    if (cell == nullptr) return;
    std::vector<std::shared_ptr<const Node>> pending;
    auto adopt = [&pending](SExpr& child) {
      if (child.node_ && child.node_.use_count() == 1) pending.push_back(std::move(child.node_));
    };
    adopt(cell->car);
    adopt(cell->cdr);
    while (!pending.empty()) {
      std::shared_ptr<const Node> node = std::move(pending.back());
      pending.pop_back();
      if (auto* inner = std::get_if<PairCell>(&const_cast<Node&>(*node).data)) {
        adopt(inner->car);
        adopt(inner->cdr);
      }
    }
  }
};

namespace {

const std::shared_ptr<const SExpr::Node>& nil_node() {
  static const auto node = std::make_shared<const SExpr::Node>(SymbolAtom{"NIL"});
  return node;
}

const std::shared_ptr<const SExpr::Node>& t_node() {
  static const auto node = std::make_shared<const SExpr::Node>(SymbolAtom{"T"});
  return node;
}

}  // namespace

bool is_valid_symbol_name(std::string_view name) noexcept {
  if (name.empty() || name == "." || looks_like_integer(name)) return false;
  for (char c : name) {
    if (is_delimiter(c)) return false;
  }
  return detail::is_valid_utf8(name);
}

SExpr::SExpr() : node_(nil_node()) {}

SExpr SExpr::integer(Integer value) { return SExpr(std::make_shared<const Node>(std::move(value))); }

SExpr SExpr::string(std::string text) {
  return SExpr(std::make_shared<const Node>(StringAtom{std::move(text)}));
}

SExpr SExpr::symbol(std::string name) {
  if (name == "NIL") return nil();
  if (name == "T") return t();
  if (!is_valid_symbol_name(name)) throw std::invalid_argument("invalid symbol name: " + name);
  return SExpr(std::make_shared<const Node>(SymbolAtom{std::move(name)}));
}

SExpr SExpr::cons(SExpr car, SExpr cdr) {
  return SExpr(std::make_shared<const Node>(PairCell{std::move(car), std::move(cdr)}));
}

SExpr SExpr::nil() { return SExpr(nil_node()); }
SExpr SExpr::t() { return SExpr(t_node()); }

SExpr::Kind SExpr::kind() const noexcept { return static_cast<Kind>(node_->data.index()); }

bool SExpr::is_nil() const noexcept { return is_symbol("NIL"); }

bool SExpr::is_symbol(std::string_view name) const noexcept {
  const auto* sym = std::get_if<SymbolAtom>(&node_->data);
  return sym != nullptr && sym->name == name;
}

const Integer& SExpr::as_integer() const {
  if (const auto* v = std::get_if<Integer>(&node_->data)) return *v;
  throw std::logic_error("SExpr is not an integer");
}

const std::string& SExpr::as_string() const {
  if (const auto* v = std::get_if<StringAtom>(&node_->data)) return v->text;
  throw std::logic_error("SExpr is not a string");
}

const std::string& SExpr::symbol_name() const {
  if (const auto* v = std::get_if<SymbolAtom>(&node_->data)) return v->name;
  throw std::logic_error("SExpr is not a symbol");
}

const SExpr& SExpr::car() const {
  if (const auto* v = std::get_if<PairCell>(&node_->data)) return v->car;
  throw std::logic_error("SExpr is not a pair");
}

const SExpr& SExpr::cdr() const {
  if (const auto* v = std::get_if<PairCell>(&node_->data)) return v->cdr;
  throw std::logic_error("SExpr is not a pair");
}

bool SExpr::is_proper_list() const noexcept {
  const SExpr* cur = this;
  while (cur->is_pair()) cur = &cur->cdr();
  return cur->is_nil();
}

bool operator==(const SExpr& a, const SExpr& b) {
  std::vector<std::pair<const SExpr*, const SExpr*>> work{{&a, &b}};
  while (!work.empty()) {
    auto [x, y] = work.back();
    work.pop_back();
    if (x->node_ == y->node_) continue;
    if (x->kind() != y->kind()) return false;
    switch (x->kind()) {
      case SExpr::Kind::Integer:
        if (x->as_integer() != y->as_integer()) return false;
        break;
      case SExpr::Kind::String:
        if (x->as_string() != y->as_string()) return false;
        break;
      case SExpr::Kind::Symbol:
        if (x->symbol_name() != y->symbol_name()) return false;
        break;
      case SExpr::Kind::Pair:
        work.emplace_back(&x->cdr(), &y->cdr());
        work.emplace_back(&x->car(), &y->car());
        break;
    }
  }
  return true;
}

SExpr make_list(std::initializer_list<SExpr> items) {
  SExpr out;
  for (auto it = items.end(); it != items.begin();) {
    --it;
    out = SExpr::cons(*it, std::move(out));
  }
  return out;
}

SyntaxError::SyntaxError(std::size_t offset, std::string reason)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + reason),
      offset_(offset),
      reason_(std::move(reason)) {}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read() {
    if (auto bad = detail::first_invalid_utf8(text_)) throw SyntaxError(*bad, "invalid UTF-8");
    while (true) {
      skip_space();
      if (pos_ == text_.size()) break;
      if (result_) throw SyntaxError(pos_, "unexpected input after expression");
      const std::size_t start = pos_;
      const char c = text_[pos_];
      if (c == '(') {
        ++pos_;
        stack_.push_back(Frame{start, {}, false, std::nullopt});
      } else if (c == ')') {
        ++pos_;
        close_list(start);
      } else if (c == '"') {
        deliver(SExpr::string(read_string()), start);
      } else {
        std::string_view token = read_token();
        if (token == ".") {
          dot(start);
        } else if (looks_like_integer(token)) {
          deliver(SExpr::integer(decimal_integer(token)), start);
        } else {
          deliver(SExpr::symbol(std::string(token)), start);
        }
      }
    }
    if (!stack_.empty()) throw SyntaxError(text_.size(), "unbalanced parenthesis: missing ')'");
    if (!result_) throw SyntaxError(text_.size(), "empty input");
    return std::move(*result_);
  }

 private:
  struct Frame {
    std::size_t open_offset;
    std::vector<SExpr> items;
    bool saw_dot = false;
    std::optional<SExpr> tail;
  };

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string_view read_token() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string read_string() {
    std::string out;
    ++pos_;  // opening quote
    while (true) {
      if (pos_ >= text_.size()) throw SyntaxError(text_.size(), "unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) throw SyntaxError(text_.size(), "unterminated string");
        const char escaped = text_[pos_];
        if (escaped != '"' && escaped != '\\') throw SyntaxError(pos_ - 1, "invalid escape in string");
        out.push_back(escaped);
        ++pos_;
      } else {
        out.push_back(c);
      }
    }
  }

  void dot(std::size_t at) {
    if (stack_.empty() || stack_.back().items.empty() || stack_.back().saw_dot) {
      throw SyntaxError(at, "stray dot");
    }
    stack_.back().saw_dot = true;
  }

  void close_list(std::size_t at) {
    if (stack_.empty()) throw SyntaxError(at, "unbalanced parenthesis: unexpected ')'");
    Frame frame = std::move(stack_.back());
    stack_.pop_back();
    if (frame.saw_dot && !frame.tail) throw SyntaxError(at, "stray dot: missing tail after '.'");
    SExpr list = frame.tail ? std::move(*frame.tail) : SExpr::nil();
    for (auto it = frame.items.rbegin(); it != frame.items.rend(); ++it) {
      list = SExpr::cons(std::move(*it), std::move(list));
    }
    deliver(std::move(list), frame.open_offset);
  }

  void deliver(SExpr value, std::size_t at) {
    if (stack_.empty()) {
      result_ = std::move(value);
      return;
    }
    Frame& top = stack_.back();
    if (top.saw_dot) {
      if (top.tail) throw SyntaxError(at, "stray dot: more than one expression after '.'");
      top.tail = std::move(value);
    } else {
      top.items.push_back(std::move(value));
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Frame> stack_;
  std::optional<SExpr> result_;
};

void append_atom(std::string& out, const SExpr& value) {
  switch (value.kind()) {
    case SExpr::Kind::Integer:
      out += value.as_integer().str();
      break;
    case SExpr::Kind::Symbol:
      out += value.symbol_name();
      break;
    case SExpr::Kind::String:
      out.push_back('"');
      for (char c : value.as_string()) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('"');
      break;
    case SExpr::Kind::Pair:
      break;
  }
}

}  // namespace

SExpr parse_sexpr(std::string_view text) { return Reader(text).read(); }

std::string print_sexpr(const SExpr& value) {
  // Work items are either a value to print or a literal piece of text.
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
    out.push_back('(');
    elements.clear();
    const SExpr* cur = item.value;
    while (cur->is_pair()) {
      elements.push_back(&cur->car());
      cur = &cur->cdr();
    }
    work.push_back({nullptr, ")"});
    if (!cur->is_nil()) {
      work.push_back({cur, {}});
      work.push_back({nullptr, " . "});
    }
    for (std::size_t i = elements.size(); i-- > 0;) {
      work.push_back({elements[i], {}});
      if (i != 0) work.push_back({nullptr, " "});
    }
  }
  return out;
}

}  // namespace bridge
