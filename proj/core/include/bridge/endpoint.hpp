#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bridge {

/// host:port pair. IPv6 literals are written in brackets, e.g. `[::1]:55433`.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// Throws std::invalid_argument on malformed input.
  static Endpoint parse(std::string_view text);

  std::string to_string() const;
  bool is_loopback() const;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

}  // namespace bridge
