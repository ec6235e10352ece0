#include "bridge/client.hpp"

#include "bridge/sexpr.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/write.hpp>

#include <poll.h>

#include <cerrno>
#include <exception>

namespace bridge {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

ServerInfo parse_hello(std::string_view body) {
  SExpr hello;
  try {
    hello = parse_sexpr(body);
  } catch (const SyntaxError& e) {
    throw HandshakeError(std::string("malformed HELLO: ") + e.what());
  }
  const bool shaped = hello.is_proper_list() && hello.is_pair() && hello.car().is_symbol("bridge") &&
                      hello.cdr().is_pair() && hello.cdr().car().is_integer() && hello.cdr().cdr().is_pair() &&
                      hello.cdr().cdr().car().is_string() && hello.cdr().cdr().cdr().is_nil();
  if (!shaped) throw HandshakeError("malformed HELLO: " + std::string(body));
  const Integer& version = hello.cdr().car().as_integer();
  if (version != kProtocolVersion) throw HandshakeError("unsupported protocol version " + version.str());
  return ServerInfo{kProtocolVersion, hello.cdr().cdr().car().as_string()};
}

struct ClientConnection::Impl final : ByteSource {
  asio::io_context io;
  tcp::socket socket{io};
  MessageReader reader{*this};
  State state = State::AwaitingHello;
  ServerInfo info;
  std::optional<std::string> last_error;
  std::chrono::milliseconds read_timeout{0};

  std::size_t read_some(std::span<char> buffer) override {
    // Asio's blocking reads retry past SO_RCVTIMEO, so the timeout is a poll.
    if (read_timeout.count() > 0) {
      pollfd pfd{socket.native_handle(), POLLIN, 0};
      int rc;
      do {
        rc = ::poll(&pfd, 1, static_cast<int>(read_timeout.count()));
      } while (rc < 0 && errno == EINTR);
      if (rc == 0) throw ConnectionClosed("timed out waiting for the server");
    }
    boost::system::error_code ec;
    const std::size_t n = socket.read_some(asio::buffer(buffer.data(), buffer.size()), ec);
    if (ec == asio::error::eof) return 0;
    if (ec) throw ConnectionClosed("connection lost: " + ec.message());
    return n;
  }

  void mark_dead() noexcept {
    state = State::Dead;
    boost::system::error_code ec;
    socket.shutdown(tcp::socket::shutdown_both, ec);
    socket.close(ec);
  }

  template <typename Error>
  [[noreturn]] void die(std::string message) {
    last_error = message;
    mark_dead();
    throw Error(std::move(message));
  }

  /// Next message; end of stream and framing errors kill the connection.
  Message next() {
    std::optional<Message> msg;
    try {
      msg = reader.next();
    } catch (const FrameError& e) {
      die<ProtocolError>(std::string("bad frame from server: ") + e.what());
    } catch (const ConnectionClosed& e) {
      die<ConnectionClosed>(e.what());
    }
    if (!msg) die<ConnectionClosed>("server closed the connection");
    return std::move(*msg);
  }
};

ClientConnection::ClientConnection(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ClientConnection::ClientConnection(ClientConnection&&) noexcept = default;
ClientConnection& ClientConnection::operator=(ClientConnection&&) noexcept = default;
ClientConnection::~ClientConnection() { close(); }

ClientConnection ClientConnection::connect(const Endpoint& endpoint, const ConnectOptions& options) {
  auto impl = std::make_unique<Impl>();
  const std::string where = endpoint.to_string();
  boost::system::error_code result = asio::error::would_block;
  tcp::resolver resolver(impl->io);
  tcp::resolver::results_type targets;
  try {
    targets = resolver.resolve(endpoint.host, std::to_string(endpoint.port), tcp::resolver::numeric_service);
  } catch (const boost::system::system_error& e) {
    throw ConnectError("cannot resolve " + where + ": " + e.code().message());
  }
  asio::async_connect(impl->socket, targets,
                      [&result](const boost::system::error_code& ec, const tcp::endpoint&) { result = ec; });
  impl->io.run_for(options.connect_timeout);
  if (result == asio::error::would_block) {
    boost::system::error_code ignored;
    impl->socket.close(ignored);
    impl->io.run();
    throw ConnectError("timed out connecting to " + where);
  }
  if (result) throw ConnectError("cannot connect to " + where + ": " + result.message());

  impl->read_timeout = options.read_timeout;
  impl->socket.set_option(tcp::no_delay(true), result);

  try {
    Message hello = impl->next();
    if (hello.kind != MessageKind::Hello) {
      throw HandshakeError("expected HELLO, got " + std::string(kind_name(hello.kind)));
    }
    impl->info = parse_hello(hello.body);
    Message ready = impl->next();
    if (ready.kind != MessageKind::Ready) {
      throw HandshakeError("expected READY after HELLO, got " + std::string(kind_name(ready.kind)));
    }
  } catch (const HandshakeError&) {
    impl->mark_dead();
    throw;
  } catch (const ClientError& e) {
    impl->mark_dead();
    throw HandshakeError(std::string("handshake failed: ") + e.what());
  }
  impl->state = State::Ready;
  return ClientConnection(std::move(impl));
}

ClientOutcome ClientConnection::run_command(std::string_view command_text, ResultMode mode,
                                            const StdoutCallback& on_stdout) {
  Impl& c = *impl_;
  if (c.state == State::Dead) throw ConnectionClosed("connection is closed");
  if (c.state != State::Ready) throw std::logic_error("run_command called while a command is in flight");
  if (command_text.empty()) throw std::invalid_argument("empty command");

  const MessageKind kind = mode == ResultMode::Json ? MessageKind::CommandJson : MessageKind::Command;
  const MessageKind expected_return = mode == ResultMode::Json ? MessageKind::ReturnJson : MessageKind::Return;
  boost::system::error_code ec;
  asio::write(c.socket, asio::buffer(encode_message(Message{kind, std::string(command_text)})), ec);
  if (ec) c.die<ConnectionClosed>("send failed: " + ec.message());
  c.state = State::InFlight;

  ClientOutcome outcome;
  outcome.mode = mode;
  std::optional<std::string> server_error;
  std::exception_ptr callback_error;
  bool finished = false;
  while (!finished) {
    Message msg = c.next();
    switch (msg.kind) {
      case MessageKind::Stdout:
        outcome.stdout_text += msg.body;
        if (on_stdout && !callback_error) {
          try {
            on_stdout(msg.body);
          } catch (...) {
            // Keep draining so the connection ends up Ready.
            callback_error = std::current_exception();
          }
        }
        break;
      case MessageKind::Error:
        server_error = std::move(msg.body);
        finished = true;
        break;
      default:
        if (msg.kind != expected_return) {
          c.die<ProtocolError>("unexpected " + std::string(kind_name(msg.kind)) + " while awaiting a reply");
        }
        outcome.value_text = std::move(msg.body);
        finished = true;
        break;
    }
  }
  Message ready = c.next();
  if (ready.kind != MessageKind::Ready) {
    c.die<ProtocolError>("expected READY, got " + std::string(kind_name(ready.kind)));
  }
  c.state = State::Ready;
  if (callback_error) std::rethrow_exception(callback_error);
  if (server_error) {
    c.last_error = *server_error;
    throw BridgeError(std::move(*server_error));
  }
  return outcome;
}

void ClientConnection::close() noexcept {
  if (impl_ && impl_->state != State::Dead) impl_->mark_dead();
}

ClientConnection::State ClientConnection::state() const noexcept { return impl_ ? impl_->state : State::Dead; }

const ServerInfo& ClientConnection::server_info() const noexcept { return impl_->info; }

const std::optional<std::string>& ClientConnection::last_error() const noexcept { return impl_->last_error; }

}  // namespace bridge
