#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace bridge::cli {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// Entry point for `bridge serve|repl|exec`. Exit codes: 0 success,
/// 1 usage/connect/bind failure, 2 server-reported command error (exec).
int run(int argc, const char* const* argv, const Streams& streams);

/// End offset of the first complete top-level expression in `input`, or
/// nullopt if more input is needed. Only balances parentheses and string
/// quotes; the server still does the real parsing. A stray ')' counts as
/// complete so the server can report it.
std::optional<std::size_t> complete_expression_end(std::string_view input);

}  // namespace bridge::cli
