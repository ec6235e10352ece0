#pragma once

#include "bridge/endpoint.hpp"
#include "bridge/protocol.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bridge {

/// Base of every error raised by ClientConnection.
class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConnectError : public ClientError {
 public:
  using ClientError::ClientError;
};

class HandshakeError : public ClientError {
 public:
  using ClientError::ClientError;
};

/// The server reported an error for a command. The connection stays usable.
class BridgeError : public ClientError {
 public:
  explicit BridgeError(std::string server_message)
      : ClientError(server_message), server_message_(std::move(server_message)) {}

  /// The ERROR body, byte for byte.
  const std::string& server_message() const noexcept { return server_message_; }

 private:
  std::string server_message_;
};

/// The server broke the reply grammar; the connection is dead.
class ProtocolError : public ClientError {
 public:
  using ClientError::ClientError;
};

class ConnectionClosed : public ClientError {
 public:
  using ClientError::ClientError;
};

enum class ResultMode { SExpr, Json };

struct ServerInfo {
  int protocol_version = 0;
  std::string session_name;
};

struct ClientOutcome {
  std::string value_text;   // canonical S-expression or JSON text
  std::string stdout_text;  // all printed output, concatenated
  ResultMode mode = ResultMode::SExpr;
};

struct ConnectOptions {
  std::chrono::milliseconds connect_timeout{10'000};
  /// Zero waits forever; long evaluations are legitimate.
  std::chrono::milliseconds read_timeout{0};
};

using StdoutCallback = std::function<void(std::string_view chunk)>;

/// Synchronous client for the bridge TCP protocol.
///
/// Commands are sent verbatim; the server does all parsing. Each
/// run_command consumes the whole reply, through the trailing READY,
/// before returning or throwing. Not thread-safe: open one connection per
/// thread.
class ClientConnection {
 public:
  enum class State { AwaitingHello, Ready, InFlight, Dead };

  /// Connects and completes the HELLO/READY handshake.
  /// Throws ConnectError or HandshakeError.
  static ClientConnection connect(const Endpoint& endpoint, const ConnectOptions& options = {});

  ClientConnection(ClientConnection&&) noexcept;
  ClientConnection& operator=(ClientConnection&&) noexcept;
  ~ClientConnection();

  /// Throws BridgeError for server-reported errors, ProtocolError when the
  /// reply breaks the protocol and ConnectionClosed when the connection is
  /// gone. Output chunks reach `on_stdout` as they arrive.
  ClientOutcome run_command(std::string_view command_text, ResultMode mode = ResultMode::SExpr,
                            const StdoutCallback& on_stdout = {});

  /// Idempotent.
  void close() noexcept;

  State state() const noexcept;
  const ServerInfo& server_info() const noexcept;
  const std::optional<std::string>& last_error() const noexcept;

 private:
  struct Impl;
  explicit ClientConnection(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Parses a HELLO body. Throws HandshakeError when malformed.
ServerInfo parse_hello(std::string_view body);

}  // namespace bridge
