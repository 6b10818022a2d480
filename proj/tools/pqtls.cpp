// pqtls — CLI front end for the handshake library and benchmark harness.
//
//   pqtls serve    --listen HOST:PORT [--kem CODE] --sig CODE [--workers W]
//   pqtls bench    --host ADDR|self --pairs k1:s1,... [--control kem:sig] ...
//   pqtls registry dump
//   pqtls keygen   --alg CODE --seed HEX
//   pqtls mlkem dump --seed HEX
//
// Exit codes: 0 success, 2 plan/config validation error, 3 transport failure.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pqtls/pqtls.hpp"

namespace {

using namespace pqtls;

// Algorithm argument: decimal/0x-hex wire code, or a registered name.
std::uint16_t parse_alg(const Registry& reg, const std::string& text) {
  try {
    std::size_t used = 0;
    unsigned long code = std::stoul(text, &used, 0);
    if (used == text.size()) {
      if (code > 0xFFFF || !reg.has(static_cast<std::uint16_t>(code)))
        throw ConfigError("unregistered wire code: " + text);
      return static_cast<std::uint16_t>(code);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    // not numeric — fall through to name lookup
  }
  try {
    return reg.code_of(text);
  } catch (const UnknownAlgorithmError& e) {
    throw ConfigError(e.what());
  }
}

std::pair<std::uint16_t, std::uint16_t> parse_pair(const Registry& reg, const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ConfigError("pair must be KEM:SIG, got: " + text);
  return {parse_alg(reg, text.substr(0, colon)), parse_alg(reg, text.substr(colon + 1))};
}

std::pair<std::string, std::uint16_t> parse_listen(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address must be HOST:PORT, got: " + text);
  std::string host = text.substr(0, colon);
  std::string port_str = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    unsigned long port = std::stoul(port_str, &used, 10);
    if (used != port_str.size() || port > 0xFFFF) throw std::invalid_argument(port_str);
    return {host.empty() ? std::string("0.0.0.0") : host, static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw ConfigError("invalid port in address: " + text);
  }
}

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

struct ServeArgs {
  std::string listen = "127.0.0.1:0";
  std::string kem;  // empty = accept every registered KEM
  std::string sig = "sig.mock.falcon512";
  int workers = 1;
  std::string identity_seed_hex = std::string(64, '4');  // 0x44... default
  std::string root_seed_hex = std::string(64, '5');
  std::int64_t bench_seed = -1;  // >=0: derive root seed like `bench --seed N`
  bool key_echo = false;
};

int cmd_serve(const ServeArgs& args) {
  const Registry& base = default_registry();
  std::uint16_t sig_code = parse_alg(base, args.sig);
  if (!base.has_sig(sig_code)) throw ConfigError("--sig must name a signature scheme");

  // --kem restricts acceptance to one KEM by serving from a filtered registry.
  Registry filtered;
  const Registry* reg = &base;
  if (!args.kem.empty()) {
    std::uint16_t kem_code = parse_alg(base, args.kem);
    if (!base.has_kem(kem_code)) throw ConfigError("--kem must name a KEM");
    filtered.add_kem(base.share_kem(kem_code));
    for (const SchemeMetadata* m : base.list())
      if (m->id.kind == AlgKind::sig) filtered.add_sig(base.share_sig(m->id.wire_code));
    reg = &filtered;
  }

  auto [host, port] = parse_listen(args.listen);
  transport::ServerConfig cfg;
  cfg.host = host;
  cfg.port = port;
  cfg.workers = args.workers;
  cfg.sig_alg = sig_code;
  cfg.identity_seed = from_hex(args.identity_seed_hex);
  cfg.root_seed = args.bench_seed >= 0
                      ? bench::detail::derive_seed(
                            static_cast<std::uint64_t>(args.bench_seed), 0xFFFF0002u, 0, 0, 0)
                      : from_hex(args.root_seed_hex);
  cfg.key_echo = args.key_echo;
  cfg.registry = reg;

  transport::Server server(cfg);
  std::printf("listening on %s:%u (sig=%s, workers=%d)\n", host.c_str(), server.port(),
              base.meta(sig_code).id.name.c_str(), args.workers);
  std::printf("trust anchor root pk (hex): %s\n",
              to_hex(server.anchor().root_pk).c_str());
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::printf("served: accepted=%llu completed=%llu failed=%llu\n",
              static_cast<unsigned long long>(server.accepted()),
              static_cast<unsigned long long>(server.completed()),
              static_cast<unsigned long long>(server.failed()));
  return 0;
}

struct BenchArgs {
  std::string host = "self";
  std::uint16_t port = 0;
  std::string pairs;
  std::string control;
  int clients = 8;
  double duration = 5.0;
  double warmup = 1.0;
  std::string mode = "modeled";
  double rtt_ms = 0.0;
  double bandwidth_bps = 0.0;
  int repetitions = 1;
  int workers = 1;
  double per_unit_us = 1.0;
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string format = "csv";
};

int cmd_bench(const BenchArgs& args) {
  const Registry& reg = default_registry();
  bench::BenchPlan plan;
  if (!args.pairs.empty()) {
    std::string rest = args.pairs;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string item = rest.substr(0, comma);
      rest = comma == std::string::npos ? std::string() : rest.substr(comma + 1);
      if (item.empty()) continue;
      auto [kem, sig] = parse_pair(reg, item);
      plan.pairs.push_back({kem, sig});
    }
  }
  if (!args.control.empty()) {
    auto [kem, sig] = parse_pair(reg, args.control);
    plan.control = {kem, sig};
  }
  plan.clients = args.clients;
  plan.duration_s = args.duration;
  plan.warmup_s = args.warmup;
  if (args.mode == "live")
    plan.mode = bench::BenchPlan::Mode::live;
  else if (args.mode == "modeled")
    plan.mode = bench::BenchPlan::Mode::modeled;
  else
    throw ConfigError("--mode must be live or modeled");
  plan.rtt_s = args.rtt_ms / 1000.0;
  plan.bandwidth_bps = args.bandwidth_bps;
  plan.repetitions = args.repetitions;
  plan.workers = args.workers;
  plan.per_unit_s = args.per_unit_us * 1e-6;
  plan.seed = args.seed;
  plan.host = args.host;
  plan.port = args.port;

  bench::ReportFormat format;
  if (args.format == "csv")
    format = bench::ReportFormat::csv;
  else if (args.format == "markdown")
    format = bench::ReportFormat::markdown;
  else if (args.format == "plotdata")
    format = bench::ReportFormat::plotdata;
  else
    throw ConfigError("--format must be csv, markdown, or plotdata");

  bench::BenchReport report = plan.mode == bench::BenchPlan::Mode::live
                                  ? bench::run_live(plan, reg)
                                  : bench::run_modeled(plan, reg);
  std::string text = bench::emit_report(report, format);
  if (args.out == "-" || args.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream f(args.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file: " + args.out);
    f << text;
  }
  return 0;
}

int cmd_keygen(const std::string& alg, const std::string& seed_hex) {
  const Registry& reg = default_registry();
  std::uint16_t code = parse_alg(reg, alg);
  Bytes seed;
  try {
    seed = from_hex(seed_hex);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--seed: ") + e.what());
  }
  if (seed.size() != kSeedLen)
    throw ConfigError("--seed must be " + std::to_string(kSeedLen) + " bytes of hex");
  const SchemeMetadata& m = reg.meta(code);
  std::printf("alg: %s (wire_code %u, %s)\n", m.id.name.c_str(), m.id.wire_code,
              to_string(m.id.kind));
  if (reg.has_kem(code)) {
    KemKeyPair kp = reg.kem(code).keygen(seed);
    std::printf("pk: %s\n", to_hex(kp.public_key).c_str());
    std::printf("sk: %s\n", to_hex(kp.secret_key).c_str());
  } else {
    SigKeyPair kp = reg.sig(code).keygen(seed);
    std::printf("pk: %s\n", to_hex(kp.public_key).c_str());
    std::printf("sk: %s\n", to_hex(kp.secret_key).c_str());
  }
  return 0;
}

// Debug dump for cross-implementation comparison: expand `seed` into a
// keypair, then encapsulate with message m = seed.
int cmd_mlkem_dump(const std::string& seed_hex) {
  Bytes seed;
  try {
    seed = from_hex(seed_hex);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--seed: ") + e.what());
  }
  if (seed.size() != mlkem::kMsgLen)
    throw ConfigError("--seed must be 32 bytes of hex");
  std::array<std::uint8_t, 32> seed32{};
  std::copy(seed.begin(), seed.end(), seed32.begin());
  mlkem::Kem512KeyPair kp = mlkem::kem512_keygen(seed32);
  auto [ct, ss] = mlkem::kem512_encap(kp.ek, seed32);
  std::printf("ek: %s\n", to_hex(kp.ek).c_str());
  std::printf("dk: %s\n", to_hex(kp.dk).c_str());
  std::printf("ct: %s\n", to_hex(ct).c_str());
  std::printf("ss: %s\n", to_hex(ss).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"post-quantum TLS-style handshake tool"};
  app.require_subcommand(1);

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand("serve", "run a handshake server");
  serve->add_option("--listen", serve_args.listen, "HOST:PORT (port 0 = ephemeral)");
  serve->add_option("--kem", serve_args.kem, "restrict accepted KEM (code or name)");
  serve->add_option("--sig", serve_args.sig, "server identity signature scheme");
  serve->add_option("--workers", serve_args.workers, "parallel handshake workers");
  serve->add_option("--identity-seed", serve_args.identity_seed_hex, "32-byte hex seed");
  serve->add_option("--root-seed", serve_args.root_seed_hex, "32-byte hex root CA seed");
  serve->add_option("--bench-seed", serve_args.bench_seed,
                    "derive the root seed `bench --host ... --seed N` expects");
  serve->add_flag("--key-echo", serve_args.key_echo, "send test-only key confirmation frame");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "benchmark handshakes per second");
  bench_cmd->add_option("--host", bench_args.host, "server address or 'self'");
  bench_cmd->add_option("--port", bench_args.port, "server port when --host is not 'self'");
  bench_cmd->add_option("--pairs", bench_args.pairs, "comma list of KEM:SIG");
  bench_cmd->add_option("--control", bench_args.control, "control KEM:SIG");
  bench_cmd->add_option("--clients", bench_args.clients, "concurrent clients C");
  bench_cmd->add_option("--duration", bench_args.duration, "measured seconds D per repetition");
  bench_cmd->add_option("--warmup", bench_args.warmup, "warmup seconds (excluded)");
  bench_cmd->add_option("--mode", bench_args.mode, "live | modeled");
  bench_cmd->add_option("--rtt", bench_args.rtt_ms, "modeled round-trip time, ms");
  bench_cmd->add_option("--bandwidth", bench_args.bandwidth_bps, "modeled bandwidth, bytes/s");
  bench_cmd->add_option("--repetitions", bench_args.repetitions, "repetitions R");
  bench_cmd->add_option("--workers", bench_args.workers, "server workers W");
  bench_cmd->add_option("--per-unit", bench_args.per_unit_us, "modeled us per cost unit");
  bench_cmd->add_option("--seed", bench_args.seed, "report seed");
  bench_cmd->add_option("--out", bench_args.out, "output file, '-' = stdout");
  bench_cmd->add_option("--format", bench_args.format, "csv | markdown | plotdata");

  CLI::App* registry_cmd = app.add_subcommand("registry", "algorithm registry");
  bool dump_requested = false;
  CLI::App* dump = registry_cmd->add_subcommand("dump", "print the registry as CSV");
  dump->callback([&dump_requested] { dump_requested = true; });
  registry_cmd->require_subcommand(1);

  std::string keygen_alg, keygen_seed;
  CLI::App* keygen = app.add_subcommand("keygen", "derive a keypair from a seed");
  keygen->add_option("--alg", keygen_alg, "algorithm code or name")->required();
  keygen->add_option("--seed", keygen_seed, "32-byte hex seed")->required();

  CLI::App* mlkem_cmd = app.add_subcommand("mlkem", "lattice KEM debug helpers");
  std::string mlkem_seed;
  CLI::App* mlkem_dump = mlkem_cmd->add_subcommand("dump", "hex dump ek/dk/ct/ss for a seed");
  mlkem_dump->add_option("--seed", mlkem_seed, "32-byte hex seed")->required();
  mlkem_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // CLI misuse is a validation error
  }

  try {
    if (*serve) return cmd_serve(serve_args);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (dump_requested) {
      std::fputs(pqtls::default_registry().dump_csv().c_str(), stdout);
      return 0;
    }
    if (*keygen) return cmd_keygen(keygen_alg, keygen_seed);
    if (*mlkem_dump) return cmd_mlkem_dump(mlkem_seed);
  } catch (const pqtls::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pqtls::TransportError& e) {
    std::fprintf(stderr, "transport error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
