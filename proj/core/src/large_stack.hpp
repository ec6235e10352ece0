#pragma once

#include <cstddef>
#include <functional>

namespace bridge::detail {

/// Runs `fn` to completion on a fresh thread whose stack is `stack_bytes`
/// large, blocking the caller. Exceptions thrown by `fn` are rethrown here.
void run_with_stack(std::size_t stack_bytes, const std::function<void()>& fn);

}  // namespace bridge::detail
