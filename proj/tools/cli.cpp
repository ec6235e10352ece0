#include "cli.hpp"

#include "bridge/client.hpp"
#include "bridge/evaluator.hpp"
#include "bridge/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <pthread.h>
#include <string>

namespace bridge::cli {

namespace {

constexpr std::string_view kDefaultEndpoint = "127.0.0.1:55433";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

struct ServeFlags {
  std::string listen;
  std::string ws_listen;
  std::string session_name = "bridge";
  std::size_t max_clients = 64;
  std::size_t max_command_bytes = std::size_t{1} << 20;
};

struct ClientFlags {
  std::string connect{kDefaultEndpoint};
  bool json = false;
  std::string command;
  double connect_timeout = 10.0;
};

int run_serve(const ServeFlags& flags, const Streams& io) {
  ServerConfig config;
  try {
    if (!flags.listen.empty()) config.tcp_listen = Endpoint::parse(flags.listen);
    if (!flags.ws_listen.empty()) config.ws_listen = Endpoint::parse(flags.ws_listen);
    if (!config.tcp_listen && !config.ws_listen) config.tcp_listen = Endpoint::parse(kDefaultEndpoint);
    config.session_name = flags.session_name;
    config.max_clients = flags.max_clients;
    config.max_command_bytes = flags.max_command_bytes;
    config.validate();
  } catch (const std::invalid_argument& e) {
    io.err << "bridge: " << e.what() << '\n';
    return 1;
  }
  config.log = [&io](std::string_view line) { io.err << line << std::endl; };

  // Block the shutdown signals before any server thread exists so that only
  // the sigwait below ever sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Session session;
  Server server(config, session);
  try {
    server.start();
  } catch (const BindError& e) {
    io.err << "bridge: " << e.what() << '\n';
    return 1;
  }
  int received = 0;
  sigwait(&signals, &received);
  io.err << "bridge: shutting down" << std::endl;
  server.stop();
  return 0;
}

std::optional<ClientConnection> open_connection(const ClientFlags& flags, const Streams& io) {
  try {
    const Endpoint endpoint = Endpoint::parse(flags.connect);
    ConnectOptions options;
    options.connect_timeout = std::chrono::milliseconds(static_cast<long long>(flags.connect_timeout * 1000.0));
    return ClientConnection::connect(endpoint, options);
  } catch (const std::exception& e) {
    io.err << "bridge: " << e.what() << '\n';
    return std::nullopt;
  }
}

ResultMode mode_of(const ClientFlags& flags) { return flags.json ? ResultMode::Json : ResultMode::SExpr; }

int run_exec(const ClientFlags& flags, const Streams& io) {
  auto conn = open_connection(flags, io);
  if (!conn) return 1;
  try {
    ClientOutcome outcome = conn->run_command(flags.command, mode_of(flags), [&io](std::string_view chunk) {
      io.out << chunk;
      io.out.flush();
    });
    io.out << outcome.value_text << '\n';
    return 0;
  } catch (const BridgeError& e) {
    io.out.flush();
    io.err << "error: " << e.server_message() << '\n';
    return 2;
  } catch (const std::exception& e) {
    io.err << "bridge: " << e.what() << '\n';
    return 1;
  }
}

int run_repl(const ClientFlags& flags, const Streams& io) {
  auto conn = open_connection(flags, io);
  if (!conn) return 1;
  io.out << "connected to session \"" << conn->server_info().session_name << "\" (protocol "
         << conn->server_info().protocol_version << ")\n";

  std::string pending;
  std::string line;
  bool continuation = false;
  while (true) {
    io.out << (continuation ? "   ... " : "bridge> ");
    io.out.flush();
    if (!std::getline(io.in, line)) {
      io.out << '\n';
      return 0;
    }
    pending += line;
    pending += '\n';
    while (auto end = complete_expression_end(pending)) {
      const std::string command = pending.substr(0, *end);
      pending.erase(0, *end);
      bool at_line_start = true;
      try {
        ClientOutcome outcome = conn->run_command(command, mode_of(flags), [&](std::string_view chunk) {
          io.out << chunk;
          io.out.flush();
          at_line_start = chunk.back() == '\n';
        });
        if (!at_line_start) io.out << '\n';
        io.out << outcome.value_text << '\n';
      } catch (const BridgeError& e) {
        if (!at_line_start) io.out << '\n';
        io.out.flush();
        io.err << "error: " << e.server_message() << std::endl;
      } catch (const std::exception& e) {
        io.err << "bridge: " << e.what() << std::endl;
        return 1;
      }
    }
    if (pending.find_first_not_of(" \t\n\r\f\v") == std::string::npos) pending.clear();
    continuation = !pending.empty();
  }
}

}  // namespace

std::optional<std::size_t> complete_expression_end(std::string_view input) {
  std::size_t i = 0;
  while (i < input.size() && is_space(input[i])) ++i;
  if (i == input.size()) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (; i < input.size(); ++i) {
    const char c = input[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
        if (depth == 0) return i + 1;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth <= 0) return i + 1;
    } else if (depth == 0) {
      // Bare atom: ends at the next delimiter.
      std::size_t j = i;
      while (j < input.size() && !is_space(input[j]) && input[j] != '(' && input[j] != ')' && input[j] != '"') ++j;
      if (j == input.size()) return std::nullopt;
      return j;
    }
  }
  return std::nullopt;
}

int run(int argc, const char* const* argv, const Streams& streams) {
  CLI::App app{"Share one evaluator session with client programs over a framed REPL protocol"};
  app.name("bridge");
  app.require_subcommand(1);

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Run a bridge server around a fresh session");
  serve->add_option("--listen", serve_flags.listen, "TCP listen address HOST:PORT (default 127.0.0.1:55433)")
      ->envname("BRIDGE_LISTEN");
  serve->add_option("--ws-listen", serve_flags.ws_listen, "WebSocket listen address HOST:PORT (path /bridge)");
  serve->add_option("--session-name", serve_flags.session_name, "Name announced in HELLO")->capture_default_str();
  serve->add_option("--max-clients", serve_flags.max_clients, "Concurrent connection limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--max-command-bytes", serve_flags.max_command_bytes, "Largest accepted command body")
      ->check(CLI::Range(std::size_t{1024}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();

  ClientFlags client_flags;
  auto add_client_flags = [&client_flags](CLI::App* sub) {
    sub->add_option("--connect", client_flags.connect, "Server address HOST:PORT")
        ->envname("BRIDGE_CONNECT")
        ->capture_default_str();
    sub->add_flag("--json", client_flags.json, "Request JSON-encoded return values");
    sub->add_option("--connect-timeout", client_flags.connect_timeout, "Seconds to wait for the connection")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto* repl = app.add_subcommand("repl", "Interactive terminal client");
  add_client_flags(repl);
  auto* exec = app.add_subcommand("exec", "Run one command and print its output and value");
  add_client_flags(exec);
  exec->add_option("--command", client_flags.command, "Command text")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, streams.out, streams.err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, streams.out, streams.err);
  } catch (const CLI::ParseError& e) {
    streams.err << "bridge: " << e.what() << '\n';
    return 1;
  }

  if (*serve) return run_serve(serve_flags, streams);
  if (client_flags.connect.empty()) {
    streams.err << "bridge: --connect must not be empty\n";
    return 1;
  }
  try {
    Endpoint::parse(client_flags.connect);
  } catch (const std::invalid_argument& e) {
    streams.err << "bridge: " << e.what() << '\n';
    return 1;
  }
  if (*exec) {
    if (client_flags.command.empty()) {
      streams.err << "bridge: --command must not be empty\n";
      return 1;
    }
    return run_exec(client_flags, streams);
  }
  return run_repl(client_flags, streams);
}

}  // namespace bridge::cli
