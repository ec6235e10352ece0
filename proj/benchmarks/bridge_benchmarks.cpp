#include "bridge/client.hpp"
#include "bridge/json_bridge.hpp"
#include "bridge/protocol.hpp"
#include "bridge/server.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace bridge;

std::string random_bytes(std::size_t n) {
  std::mt19937_64 rng(n);
  std::string out(n, '\0');
  for (auto& c : out) c = static_cast<char>(rng());
  return out;
}

// (0 (1 "s" 2 sym) (2 ...) ...) with `n` elements.
SExpr sample_tree(int n) {
  std::string text = "(";
  for (int i = 0; i < n; ++i) text += "(" + std::to_string(i) + " \"str\\\"ing\" " + std::to_string(i * 1000003) + " sym-" + std::to_string(i) + ") ";
  return parse_sexpr(text + ")");
}

void BM_EncodeMessage(benchmark::State& state) {
  const Message msg{MessageKind::Stdout, random_bytes(static_cast<std::size_t>(state.range(0)))};
  for (auto _ : state) benchmark::DoNotOptimize(encode_message(msg));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeMessage)->Range(16, 64 << 10);

void BM_DecodeStream(benchmark::State& state) {
  std::string stream;
  for (int i = 0; i < 256; ++i) stream += encode_message({MessageKind::Stdout, random_bytes(static_cast<std::size_t>(state.range(0)))});
  for (auto _ : state) {
    StringSource source(stream, 1500);  // roughly one Ethernet payload per read
    MessageReader reader(source);
    while (auto m = reader.next()) benchmark::DoNotOptimize(m);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_DecodeStream)->Range(16, 64 << 10);

void BM_ParseSexpr(benchmark::State& state) {
  const std::string text = print_sexpr(sample_tree(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(parse_sexpr(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseSexpr)->Range(8, 8 << 10);

void BM_PrintSexpr(benchmark::State& state) {
  const SExpr tree = sample_tree(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(print_sexpr(tree));
}
BENCHMARK(BM_PrintSexpr)->Range(8, 8 << 10);

void BM_SexprToJsonText(benchmark::State& state) {
  const SExpr tree = sample_tree(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sexpr_to_json_text(tree));
}
BENCHMARK(BM_SexprToJsonText)->Range(8, 8 << 10);

void BM_EvaluateFactorial(benchmark::State& state) {
  Session session;
  session.evaluate_command(parse_sexpr("(defun fact (n) (if (< n 2) 1 (* n (fact (- n 1)))))"), {});
  const SExpr call = parse_sexpr("(fact " + std::to_string(state.range(0)) + ")");
  for (auto _ : state) benchmark::DoNotOptimize(session.evaluate_command(call, {}));
}
BENCHMARK(BM_EvaluateFactorial)->Arg(10)->Arg(100)->Arg(1000);

// Full client/server round trip over loopback TCP.
void BM_LoopbackRoundTrip(benchmark::State& state) {
  ServerConfig config;
  config.tcp_listen = Endpoint{"127.0.0.1", 0};
  config.log = [](std::string_view) {};
  Session session;
  Server server(config, session);
  server.start();
  auto conn = ClientConnection::connect(*server.tcp_endpoint());
  const std::string command = state.range(0) == 0 ? "(+ 1 2)" : "(progn (cw \"x~%\") (cw \"y~%\") (list 1 2 3))";
  for (auto _ : state) benchmark::DoNotOptimize(conn.run_command(command));
  conn.close();
  server.stop();
}
BENCHMARK(BM_LoopbackRoundTrip)->Arg(0)->Arg(1)->UseRealTime();

}  // namespace

// The packaged benchmark_main archive is LTO bytecode tied to another compiler
// release, so the main comes from the shared library instead.
BENCHMARK_MAIN();
