#include "bridge/server.hpp"

#include "bridge/json_bridge.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/write.hpp>
#include <boost/beast/core/buffers_to_string.hpp>
#include <boost/beast/core/flat_buffer.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <list>
#include <system_error>
#include <thread>

namespace bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

void ServerConfig::validate() const {
  if (!tcp_listen && !ws_listen) throw std::invalid_argument("no listen address configured");
  if (max_clients == 0) throw std::invalid_argument("max-clients must be positive");
  if (max_command_bytes < 1024) throw std::invalid_argument("max-command-bytes must be at least 1024");
}

std::string hello_body(std::string_view session_name) {
  return print_sexpr(make_list(
      {SExpr::symbol("bridge"), SExpr::integer(kProtocolVersion), SExpr::string(std::string(session_name))}));
}

namespace {

Message reply(MessageKind kind, std::string body = {}) { return Message{kind, std::move(body)}; }

}  // namespace

LoopEnd client_loop(MessageChannel& channel, CommandGate& gate, const ClientLoopOptions& options) {
  if (!channel.send(reply(MessageKind::Hello, hello_body(options.session_name)))) return LoopEnd::TransportError;
  if (!channel.send(reply(MessageKind::Ready))) return LoopEnd::TransportError;
  try {
    while (true) {
      std::optional<Inbound> inbound = channel.receive(options.max_command_bytes);
      if (!inbound) return LoopEnd::PeerClosed;
      if (!is_client_kind(inbound->kind)) return LoopEnd::ProtocolViolation;
      const bool json = inbound->kind == MessageKind::CommandJson;

      Message result;
      if (inbound->oversized) {
        result = reply(MessageKind::Error, "command too large: " + std::to_string(inbound->declared_length) +
                                               " bytes exceeds the limit of " +
                                               std::to_string(options.max_command_bytes));
      } else {
        std::optional<SExpr> command;
        try {
          command = parse_sexpr(inbound->body);
        } catch (const SyntaxError& e) {
          result = reply(MessageKind::Error, e.what());
        }
        if (command) {
          // Printed output goes out as it is produced, not at command end.
          CommandOutcome outcome = gate.run(*command, [&channel](std::string_view chunk) {
            channel.send(reply(MessageKind::Stdout, std::string(chunk)));
          });
          if (!outcome.returned()) {
            result = reply(MessageKind::Error, std::move(outcome.error_message));
          } else if (!json) {
            result = reply(MessageKind::Return, print_sexpr(outcome.value));
          } else {
            try {
              result = reply(MessageKind::ReturnJson, sexpr_to_json_text(outcome.value));
            } catch (const UnencodableValue& e) {
              result = reply(MessageKind::Error, e.what());
            }
          }
        }
      }
      if (!channel.send(result) || !channel.send(reply(MessageKind::Ready))) return LoopEnd::TransportError;
    }
  } catch (const FrameError&) {
    return LoopEnd::FrameError;
  } catch (const std::exception&) {
    return LoopEnd::TransportError;
  }
}

namespace {

class TcpChannel final : public MessageChannel, private ByteSource {
 public:
  explicit TcpChannel(tcp::socket& socket) : socket_(socket), reader_(*this) {}

  std::optional<Inbound> receive(std::size_t max_body) override {
    auto header = reader_.read_header();
    if (!header) return std::nullopt;
    if (header->length > max_body) {
      reader_.skip_body(*header);
      return Inbound{header->kind, {}, header->length, true};
    }
    return Inbound{header->kind, reader_.read_body(*header), header->length, false};
  }

  bool send(const Message& msg) noexcept override {
    if (broken_) return false;
    try {
      boost::system::error_code ec;
      asio::write(socket_, asio::buffer(encode_message(msg)), ec);
      if (ec) broken_ = true;
    } catch (...) {
      broken_ = true;
    }
    return !broken_;
  }

 private:
  std::size_t read_some(std::span<char> buffer) override {
    boost::system::error_code ec;
    const std::size_t n = socket_.read_some(asio::buffer(buffer.data(), buffer.size()), ec);
    if (ec == asio::error::eof) return 0;
    if (ec) throw std::system_error(ec);
    return n;
  }

  tcp::socket& socket_;
  MessageReader reader_;
  bool broken_ = false;
};

class WsChannel final : public MessageChannel {
 public:
  explicit WsChannel(websocket::stream<tcp::socket>& ws) : ws_(ws) {}

  std::optional<Inbound> receive(std::size_t max_body) override {
    // Envelope escaping can inflate a body up to six-fold.
    ws_.read_message_max(max_body * 6 + 4096);
    buffer_.clear();
    boost::system::error_code ec;
    ws_.read(buffer_, ec);
    if (ec == websocket::error::closed || ec == asio::error::eof) return std::nullopt;
    if (ec) throw std::system_error(ec);
    Message msg = decode_envelope(beast::buffers_to_string(buffer_.data()));
    const std::size_t length = msg.body.size();
    if (length > max_body) return Inbound{msg.kind, {}, length, true};
    return Inbound{msg.kind, std::move(msg.body), length, false};
  }

  bool send(const Message& msg) noexcept override {
    if (broken_) return false;
    try {
      boost::system::error_code ec;
      ws_.text(true);
      ws_.write(asio::buffer(encode_envelope(msg)), ec);
      if (ec) broken_ = true;
    } catch (...) {
      broken_ = true;
    }
    return !broken_;
  }

 private:
  websocket::stream<tcp::socket>& ws_;
  beast::flat_buffer buffer_;
  bool broken_ = false;
};

enum class Transport { Tcp, WebSocket };

std::string_view transport_name(Transport t) { return t == Transport::Tcp ? "tcp" : "websocket"; }

bool is_bridge_target(std::string_view target) {
  const auto query = target.find('?');
  return target.substr(0, query) == "/bridge";
}

}  // namespace

struct Server::Impl {
  struct Connection {
    std::mutex mutex;
    bool closed = false;
    int fd = -1;
    std::thread thread;
    std::atomic<bool> finished{false};

    // Wakes a worker blocked in receive; replies already queued still go out.
    void interrupt() {
      std::lock_guard lock(mutex);
      if (!closed && fd >= 0) ::shutdown(fd, SHUT_RD);
    }
  };

  struct Listener {
    Transport transport;
    tcp::acceptor acceptor;
    Endpoint bound;
  };

  Impl(ServerConfig cfg, Evaluator& evaluator) : config(std::move(cfg)), gate(evaluator) {
    if (!config.log) config.log = [](std::string_view line) { std::cerr << line << std::endl; };
  }

  void bind(Transport transport, const Endpoint& endpoint) {
    try {
      tcp::resolver resolver(io);
      auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port),
                                      tcp::resolver::passive | tcp::resolver::numeric_service);
      const tcp::endpoint target = results.begin()->endpoint();
      tcp::acceptor acceptor(io);
      acceptor.open(target.protocol());
      acceptor.set_option(asio::socket_base::reuse_address(true));
      acceptor.bind(target);
      acceptor.listen(asio::socket_base::max_listen_connections);
      const tcp::endpoint local = acceptor.local_endpoint();
      Endpoint bound{local.address().to_string(), local.port()};
      listeners.push_back(Listener{transport, std::move(acceptor), bound});
      config.log("bridge: listening (" + std::string(transport_name(transport)) + ") on " + bound.to_string() +
                 (transport == Transport::WebSocket ? "/bridge" : ""));
      if (!endpoint.is_loopback()) {
        config.log("WARNING: bridge bound to non-loopback address " + endpoint.to_string() +
                   "; there is no authentication and any client that connects gets full control of the session");
      }
    } catch (const boost::system::system_error& e) {
      throw BindError("cannot bind " + std::string(transport_name(transport)) + " " + endpoint.to_string() + ": " +
                      e.code().message());
    }
  }

  void arm(Listener& listener) {
    listener.acceptor.async_accept([this, &listener](boost::system::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted || stopping) return;
      if (!ec) on_accept(listener.transport, std::move(socket));
      arm(listener);
    });
  }

  void reap_locked() {
    for (auto it = connections.begin(); it != connections.end();) {
      if ((*it)->finished) {
        (*it)->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void on_accept(Transport transport, tcp::socket socket) {
    std::lock_guard lock(mutex);
    reap_locked();
    boost::system::error_code ec;
    if (stopping) {
      socket.close(ec);
      return;
    }
    if (connections.size() >= config.max_clients) {
      config.log("bridge: refusing connection, max-clients (" + std::to_string(config.max_clients) + ") reached");
      socket.close(ec);
      return;
    }
    // Replies are several small frames; Nagle would hold them back.
    socket.set_option(tcp::no_delay(true), ec);
    auto conn = std::make_shared<Connection>();
    conn->fd = socket.native_handle();
    conn->thread = std::thread([this, conn, transport, s = std::move(socket)]() mutable {
      if (transport == Transport::Tcp) {
        serve_tcp(*conn, s);
      } else {
        serve_ws(*conn, s);
      }
      conn->finished = true;
    });
    connections.push_back(std::move(conn));
  }

  ClientLoopOptions loop_options() const { return ClientLoopOptions{config.session_name, config.max_command_bytes}; }

  static void close_socket(Connection& conn, tcp::socket& socket) {
    std::lock_guard lock(conn.mutex);
    boost::system::error_code ec;
    socket.shutdown(tcp::socket::shutdown_both, ec);
    socket.close(ec);
    conn.closed = true;
  }

  void serve_tcp(Connection& conn, tcp::socket& socket) {
    TcpChannel channel(socket);
    client_loop(channel, gate, loop_options());
    close_socket(conn, socket);
  }

  void serve_ws(Connection& conn, tcp::socket& socket) {
    boost::system::error_code ec;
    beast::flat_buffer buffer;
    http::request<http::string_body> request;
    http::read(socket, buffer, request, ec);
    if (ec) {
      close_socket(conn, socket);
      return;
    }
    if (!websocket::is_upgrade(request) || !is_bridge_target(std::string_view(request.target().data(), request.target().size()))) {
      http::response<http::string_body> response{http::status::not_found, request.version()};
      response.set(http::field::content_type, "text/plain");
      response.body() = "bridge websocket endpoint is /bridge\n";
      response.prepare_payload();
      http::write(socket, response, ec);
      close_socket(conn, socket);
      return;
    }
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept(request, ec);
    if (!ec) {
      WsChannel channel(ws);
      client_loop(channel, gate, loop_options());
      ws.close(websocket::close_code::normal, ec);
    }
    close_socket(conn, ws.next_layer());
  }

  std::optional<Endpoint> bound(Transport transport) const {
    for (const auto& l : listeners) {
      if (l.transport == transport) return l.bound;
    }
    return std::nullopt;
  }

  ServerConfig config;
  CommandGate gate;
  asio::io_context io;
  std::list<Listener> listeners;
  std::thread io_thread;

  mutable std::mutex mutex;
  std::condition_variable stopped_cv;
  std::list<std::shared_ptr<Connection>> connections;
  std::atomic<bool> stopping{false};
  bool started = false;
  bool stopped = false;
};

Server::Server(ServerConfig config, Evaluator& evaluator)
    : impl_(std::make_unique<Impl>(std::move(config), evaluator)) {}

Server::~Server() { stop(); }

void Server::start() {
  impl_->config.validate();
  if (impl_->started) throw std::logic_error("server already started");
  if (impl_->config.tcp_listen) impl_->bind(Transport::Tcp, *impl_->config.tcp_listen);
  if (impl_->config.ws_listen) impl_->bind(Transport::WebSocket, *impl_->config.ws_listen);
  for (auto& listener : impl_->listeners) impl_->arm(listener);
  impl_->started = true;
  impl_->io_thread = std::thread([this] { impl_->io.run(); });
}

std::optional<Endpoint> Server::tcp_endpoint() const { return impl_->bound(Transport::Tcp); }
std::optional<Endpoint> Server::ws_endpoint() const { return impl_->bound(Transport::WebSocket); }

std::size_t Server::active_connections() const {
  std::lock_guard lock(impl_->mutex);
  std::size_t n = 0;
  for (const auto& c : impl_->connections) n += c->finished ? 0 : 1;
  return n;
}

void Server::stop() {
  bool first = false;
  {
    std::lock_guard lock(impl_->mutex);
    first = !impl_->stopping.exchange(true);
  }
  if (!first) {
    wait();
    return;
  }
  if (impl_->io_thread.joinable()) {
    asio::post(impl_->io, [this] {
      boost::system::error_code ec;
      for (auto& l : impl_->listeners) l.acceptor.close(ec);
    });
    impl_->io_thread.join();
  }
  std::list<std::shared_ptr<Impl::Connection>> remaining;
  {
    std::lock_guard lock(impl_->mutex);
    remaining.swap(impl_->connections);
  }
  for (auto& conn : remaining) conn->interrupt();
  for (auto& conn : remaining) conn->thread.join();
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopped = true;
  }
  impl_->stopped_cv.notify_all();
}

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

}  // namespace bridge
