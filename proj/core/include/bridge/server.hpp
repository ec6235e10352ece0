#pragma once

#include "bridge/endpoint.hpp"
#include "bridge/evaluator.hpp"
#include "bridge/protocol.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bridge {

using LogFn = std::function<void(std::string_view line)>;

struct ServerConfig {
  std::optional<Endpoint> tcp_listen;
  std::optional<Endpoint> ws_listen;
  std::string session_name = "bridge";
  std::size_t max_clients = 64;
  std::size_t max_command_bytes = std::size_t{1} << 20;
  /// Diagnostics sink; defaults to standard error.
  LogFn log;

  /// Throws std::invalid_argument if no listener is configured, max_clients
  /// is zero or max_command_bytes is below 1024.
  void validate() const;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serializes access to an Evaluator: one command at a time, process-wide.
class CommandGate {
 public:
  explicit CommandGate(Evaluator& evaluator) : evaluator_(evaluator) {}

  CommandOutcome run(const SExpr& command, const EmitFn& emit) {
    std::lock_guard lock(mutex_);
    return evaluator_.evaluate_command(command, emit);
  }

 private:
  Evaluator& evaluator_;
  std::mutex mutex_;
};

/// One client message as seen by the server. When the declared body length
/// exceeds the receive limit, `oversized` is set and `body` is left empty.
struct Inbound {
  MessageKind kind;
  std::string body;
  std::size_t declared_length = 0;
  bool oversized = false;
};

/// A message-level duplex connection (TCP framing or WebSocket envelopes).
class MessageChannel {
 public:
  virtual ~MessageChannel() = default;
  /// nullopt when the peer has closed. Throws FrameError on framing
  /// violations and std::system_error on transport failures.
  virtual std::optional<Inbound> receive(std::size_t max_body) = 0;
  /// Returns false once the channel is broken.
  virtual bool send(const Message& msg) noexcept = 0;
};

struct ClientLoopOptions {
  std::string session_name = "bridge";
  std::size_t max_command_bytes = std::size_t{1} << 20;
};

enum class LoopEnd {
  PeerClosed,
  FrameError,
  ProtocolViolation,  // peer sent a server-only message kind
  TransportError,
};

/// HELLO body: `(bridge <version> "<session name>")`.
std::string hello_body(std::string_view session_name);

/// Runs the per-connection read-eval-print loop until the peer leaves or
/// the connection fails. Every COMMAND or COMMAND_JSON gets
/// STDOUT* (RETURN | RETURN_JSON | ERROR) READY in reply.
LoopEnd client_loop(MessageChannel& channel, CommandGate& gate, const ClientLoopOptions& options);

/// TCP and WebSocket front end over one shared evaluator. One worker thread
/// per connection; evaluation is serialized through a CommandGate.
class Server {
 public:
  Server(ServerConfig config, Evaluator& evaluator);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the configured listeners and starts accepting. Port 0 picks a
  /// free port; see tcp_endpoint() / ws_endpoint(). Throws BindError.
  void start();

  /// Actual bound addresses, available after start().
  std::optional<Endpoint> tcp_endpoint() const;
  std::optional<Endpoint> ws_endpoint() const;

  std::size_t active_connections() const;

  /// Stops accepting, lets in-flight commands finish and closes every
  /// connection after its last READY. Idempotent; blocks until done.
  void stop();

  /// Blocks until stop() has completed.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bridge
