#pragma once

#include "bridge/sexpr.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bridge {

/// Receives printed output while a command runs, one chunk per print call.
using EmitFn = std::function<void(std::string_view chunk)>;

/// What one command produced.
struct CommandOutcome {
  enum class Status { Returned, Errored };

  Status status = Status::Returned;
  SExpr value;                // meaningful when Returned
  std::string error_message;  // one line; meaningful when Errored
  std::vector<std::string> printed_chunks;

  bool returned() const noexcept { return status == Status::Returned; }
  std::string printed_output() const;
};

/// The only surface the server sees. Implementations must turn every
/// failure into an Errored outcome and stay usable afterwards. Callers
/// serialize access; implementations need not be thread-safe.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual CommandOutcome evaluate_command(const SExpr& command, const EmitFn& emit) = 0;
};

/// The embedded Lisp-like session shared by every client.
///
/// Special forms: quote if progn setq lambda defun.
/// Builtins: + - * car cdr cons list equal < cw error.
///
/// Globals written by a command are buffered and committed only when the
/// command returns, so an errored command leaves the session untouched.
/// Evaluation runs on an internal thread with a large stack; nesting deeper
/// than `kMaxDepth` evaluations ends the command with an error.
class Session final : public Evaluator {
 public:
  static constexpr std::size_t kMaxDepth = 10'000;

  CommandOutcome evaluate_command(const SExpr& command, const EmitFn& emit) override;

  /// Committed global bindings, keyed by symbol name.
  const std::map<std::string, SExpr, std::less<>>& globals() const noexcept { return globals_; }

 private:
  std::map<std::string, SExpr, std::less<>> globals_;
};

}  // namespace bridge
