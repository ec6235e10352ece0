#include "bridge/evaluator.hpp"

#include "large_stack.hpp"

#include <algorithm>
#include <array>
#include <new>
#include <optional>
#include <utility>

namespace bridge {

std::string CommandOutcome::printed_output() const {
  std::string out;
  for (const auto& chunk : printed_chunks) out += chunk;
  return out;
}

namespace {

constexpr std::size_t kEvalStackBytes = std::size_t{256} << 20;
constexpr std::size_t kDescribeLimit = 120;

constexpr std::array<std::string_view, 6> kSpecialForms = {"quote", "if", "progn", "setq", "lambda", "defun"};

enum class Builtin { Add, Sub, Mul, Car, Cdr, Cons, List, Equal, Less, Cw, Error };

constexpr std::array<std::pair<std::string_view, Builtin>, 11> kBuiltins = {{
    {"+", Builtin::Add},
    {"-", Builtin::Sub},
    {"*", Builtin::Mul},
    {"car", Builtin::Car},
    {"cdr", Builtin::Cdr},
    {"cons", Builtin::Cons},
    {"list", Builtin::List},
    {"equal", Builtin::Equal},
    {"<", Builtin::Less},
    {"cw", Builtin::Cw},
    {"error", Builtin::Error},
}};

std::optional<Builtin> find_builtin(std::string_view name) {
  for (const auto& [n, b] : kBuiltins) {
    if (n == name) return b;
  }
  return std::nullopt;
}

bool is_special_form(std::string_view name) {
  return std::find(kSpecialForms.begin(), kSpecialForms.end(), name) != kSpecialForms.end();
}

bool is_reserved(std::string_view name) {
  return name == "NIL" || name == "T" || is_special_form(name) || find_builtin(name).has_value();
}

struct EvalError {
  std::string message;
};

[[noreturn]] void fail(std::string message) { throw EvalError{std::move(message)}; }

std::string describe(const SExpr& value) {
  std::string text = print_sexpr(value);
  if (text.size() > kDescribeLimit) {
    text.resize(kDescribeLimit);
    text += "...";
  }
  return text;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

std::vector<SExpr> list_items(const SExpr& list) {
  std::vector<SExpr> out;
  for (const SExpr* cur = &list; cur->is_pair(); cur = &cur->cdr()) out.push_back(cur->car());
  return out;
}

void expect_arity(std::string_view name, std::size_t got, std::size_t min, std::size_t max) {
  if (got >= min && got <= max) return;
  std::string expected;
  if (min == max) {
    expected = std::to_string(min);
  } else if (max == SIZE_MAX) {
    expected = "at least " + std::to_string(min);
  } else {
    expected = std::to_string(min) + " to " + std::to_string(max);
  }
  fail(std::string(name) + ": expected " + expected + " argument" + (min == 1 && max == 1 ? "" : "s") +
       ", got " + std::to_string(got));
}

const Integer& expect_integer(std::string_view name, const SExpr& value) {
  if (!value.is_integer()) fail(std::string(name) + ": expected an integer, got " + describe(value));
  return value.as_integer();
}

SExpr truth(bool b) { return b ? SExpr::t() : SExpr::nil(); }

/// Expands `~a` and `~%` directives against `args` starting at `first_arg`.
std::string format_directives(std::string_view who, const std::string& control, const std::vector<SExpr>& args,
                              std::size_t first_arg) {
  std::string out;
  std::size_t next = first_arg;
  for (std::size_t i = 0; i < control.size(); ++i) {
    const char c = control[i];
    if (c != '~') {
      out.push_back(c);
      continue;
    }
    if (i + 1 == control.size()) fail(std::string(who) + ": control string ends with '~'");
    const char directive = control[++i];
    if (directive == '%') {
      out.push_back('\n');
    } else if (directive == 'a') {
      if (next >= args.size()) fail(std::string(who) + ": not enough arguments for ~a");
      out += print_sexpr(args[next++]);
    } else {
      fail(std::string(who) + ": unsupported directive ~" + std::string(1, directive));
    }
  }
  return out;
}

class Interpreter {
 public:
  using Globals = std::map<std::string, SExpr, std::less<>>;

  Interpreter(const Globals& committed, const EmitFn& emit, std::vector<std::string>& chunks)
      : committed_(committed), emit_(emit), chunks_(chunks) {}

  SExpr run(const SExpr& command) { return eval(command, nullptr); }

  Globals& pending() { return pending_; }

 private:
  using Frame = std::vector<std::pair<std::string, SExpr>>;

  struct DepthGuard {
    explicit DepthGuard(std::size_t& depth) : depth_(depth) {
      if (++depth_ > Session::kMaxDepth) {
        --depth_;
        fail("recursion depth limit of " + std::to_string(Session::kMaxDepth) + " exceeded");
      }
    }
    ~DepthGuard() { --depth_; }
    std::size_t& depth_;
  };

  static SExpr* find_local(Frame* frame, std::string_view name) {
    if (frame == nullptr) return nullptr;
    for (auto& [n, v] : *frame) {
      if (n == name) return &v;
    }
    return nullptr;
  }

  const SExpr* find_global(std::string_view name) const {
    if (auto it = pending_.find(name); it != pending_.end()) return &it->second;
    if (auto it = committed_.find(name); it != committed_.end()) return &it->second;
    return nullptr;
  }

  SExpr lookup(const std::string& name, Frame* frame) const {
    if (const SExpr* v = find_local(frame, name)) return *v;
    if (const SExpr* v = find_global(name)) return *v;
    fail("unbound symbol: " + name);
  }

  SExpr eval(const SExpr& form, Frame* frame) {
    DepthGuard guard(depth_);
    switch (form.kind()) {
      case SExpr::Kind::Integer:
      case SExpr::Kind::String:
        return form;
      case SExpr::Kind::Symbol:
        if (form.is_nil() || form.is_symbol("T")) return form;
        return lookup(form.symbol_name(), frame);
      case SExpr::Kind::Pair:
        break;
    }
    if (!form.is_proper_list()) fail("malformed form: " + describe(form));
    const SExpr& op = form.car();
    std::vector<SExpr> args = list_items(form.cdr());

    if (op.is_symbol()) {
      const std::string& name = op.symbol_name();
      if (is_special_form(name)) return eval_special(name, form, args, frame);
      if (auto builtin = find_builtin(name)) {
        for (auto& arg : args) arg = eval(arg, frame);
        return call_builtin(*builtin, name, args);
      }
      SExpr fn = lookup(name, frame);
      for (auto& arg : args) arg = eval(arg, frame);
      return apply(fn, name, args);
    }
    if (op.is_pair() && op.car().is_symbol("lambda")) {
      SExpr fn = eval(op, frame);
      for (auto& arg : args) arg = eval(arg, frame);
      return apply(fn, "lambda", args);
    }
    fail("not a function: " + describe(op));
  }

  static void check_params(std::string_view who, const SExpr& params) {
    if (!params.is_proper_list()) fail(std::string(who) + ": parameter list must be a proper list");
    std::vector<std::string> seen;
    for (const SExpr& p : list_items(params)) {
      if (!p.is_symbol() || p.is_nil() || p.is_symbol("T")) {
        fail(std::string(who) + ": invalid parameter " + describe(p));
      }
      if (std::find(seen.begin(), seen.end(), p.symbol_name()) != seen.end()) {
        fail(std::string(who) + ": duplicate parameter " + p.symbol_name());
      }
      seen.push_back(p.symbol_name());
    }
  }

  SExpr eval_body(const SExpr& body, Frame* frame) {
    SExpr result;
    for (const SExpr* cur = &body; cur->is_pair(); cur = &cur->cdr()) result = eval(cur->car(), frame);
    return result;
  }

  SExpr eval_special(const std::string& name, const SExpr& form, const std::vector<SExpr>& args, Frame* frame) {
    if (name == "quote") {
      expect_arity(name, args.size(), 1, 1);
      return args[0];
    }
    if (name == "if") {
      expect_arity(name, args.size(), 2, 3);
      if (!eval(args[0], frame).is_nil()) return eval(args[1], frame);
      return args.size() == 3 ? eval(args[2], frame) : SExpr::nil();
    }
    if (name == "progn") return eval_body(form.cdr(), frame);
    if (name == "setq") {
      expect_arity(name, args.size(), 2, 2);
      const SExpr& target = args[0];
      if (!target.is_symbol()) fail("setq: expected a symbol, got " + describe(target));
      if (is_reserved(target.symbol_name())) fail("setq: cannot assign to " + target.symbol_name());
      SExpr value = eval(args[1], frame);
      if (SExpr* local = find_local(frame, target.symbol_name())) {
        *local = value;
      } else {
        pending_.insert_or_assign(target.symbol_name(), value);
      }
      return value;
    }
    if (name == "lambda") {
      expect_arity(name, args.size(), 1, SIZE_MAX);
      check_params(name, args[0]);
      return form;
    }
    // defun
    expect_arity(name, args.size(), 2, SIZE_MAX);
    const SExpr& fname = args[0];
    if (!fname.is_symbol()) fail("defun: expected a function name, got " + describe(fname));
    if (is_reserved(fname.symbol_name())) fail("defun: cannot redefine " + fname.symbol_name());
    check_params(name, args[1]);
    pending_.insert_or_assign(fname.symbol_name(), SExpr::cons(SExpr::symbol("lambda"), form.cdr().cdr()));
    return fname;
  }

  SExpr apply(const SExpr& fn, const std::string& who, const std::vector<SExpr>& args) {
    if (!fn.is_pair() || !fn.car().is_symbol("lambda") || !fn.cdr().is_pair() || !fn.is_proper_list()) {
      fail("not a function: " + who);
    }
    const SExpr& params = fn.cdr().car();
    check_params(who, params);
    std::vector<SExpr> names = list_items(params);
    expect_arity(who, args.size(), names.size(), names.size());
    Frame frame;
    frame.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) frame.emplace_back(names[i].symbol_name(), args[i]);
    return eval_body(fn.cdr().cdr(), &frame);
  }

  SExpr call_builtin(Builtin builtin, std::string_view name, const std::vector<SExpr>& args) {
    switch (builtin) {
      case Builtin::Add: {
        Integer sum = 0;
        for (const auto& a : args) sum += expect_integer(name, a);
        return SExpr::integer(std::move(sum));
      }
      case Builtin::Mul: {
        Integer product = 1;
        for (const auto& a : args) product *= expect_integer(name, a);
        return SExpr::integer(std::move(product));
      }
      case Builtin::Sub: {
        expect_arity(name, args.size(), 1, SIZE_MAX);
        Integer acc = expect_integer(name, args[0]);
        if (args.size() == 1) return SExpr::integer(-acc);
        for (std::size_t i = 1; i < args.size(); ++i) acc -= expect_integer(name, args[i]);
        return SExpr::integer(std::move(acc));
      }
      case Builtin::Car:
      case Builtin::Cdr: {
        expect_arity(name, args.size(), 1, 1);
        const SExpr& v = args[0];
        if (v.is_nil()) return v;
        if (!v.is_pair()) fail(std::string(name) + ": expected a pair or NIL, got " + describe(v));
        return builtin == Builtin::Car ? v.car() : v.cdr();
      }
      case Builtin::Cons:
        expect_arity(name, args.size(), 2, 2);
        return SExpr::cons(args[0], args[1]);
      case Builtin::List: {
        SExpr out;
        for (auto it = args.rbegin(); it != args.rend(); ++it) out = SExpr::cons(*it, std::move(out));
        return out;
      }
      case Builtin::Equal:
        expect_arity(name, args.size(), 2, 2);
        return truth(args[0] == args[1]);
      case Builtin::Less:
        expect_arity(name, args.size(), 2, 2);
        return truth(expect_integer(name, args[0]) < expect_integer(name, args[1]));
      case Builtin::Cw: {
        expect_arity(name, args.size(), 1, SIZE_MAX);
        if (!args[0].is_string()) fail("cw: expected a control string, got " + describe(args[0]));
        std::string chunk = format_directives(name, args[0].as_string(), args, 1);
        emit_(chunk);
        chunks_.push_back(std::move(chunk));
        return SExpr::nil();
      }
      case Builtin::Error:
        expect_arity(name, args.size(), 1, SIZE_MAX);
        if (args[0].is_string()) fail(format_directives(name, args[0].as_string(), args, 1));
        fail(print_sexpr(args[0]));
    }
    fail("unknown builtin");
  }

  const Globals& committed_;
  Globals pending_;
  const EmitFn& emit_;
  std::vector<std::string>& chunks_;
  std::size_t depth_ = 0;
};

}  // namespace

CommandOutcome Session::evaluate_command(const SExpr& command, const EmitFn& emit) {
  CommandOutcome outcome;
  auto errored = [&outcome](std::string message) {
    outcome.status = CommandOutcome::Status::Errored;
    outcome.value = SExpr::nil();
    outcome.error_message = one_line(std::move(message));
  };
  const EmitFn sink = emit ? emit : EmitFn([](std::string_view) {});
  try {
    detail::run_with_stack(kEvalStackBytes, [&] {
      Interpreter interp(globals_, sink, outcome.printed_chunks);
      try {
        outcome.value = interp.run(command);
      } catch (EvalError& e) {
        errored(std::move(e.message));
        return;
      }
      outcome.status = CommandOutcome::Status::Returned;
      for (auto& [name, value] : interp.pending()) globals_.insert_or_assign(name, std::move(value));
    });
  } catch (const std::bad_alloc&) {
    errored("out of memory");
  } catch (const std::exception& e) {
    errored(std::string("internal error: ") + e.what());
  } catch (...) {
    errored("internal error");
  }
  return outcome;
}

}  // namespace bridge
