// The connections-per-second experiment: drive C concurrent clients at a
// server for each KEM-SIG pair, measure completed handshakes per second,
// and report each pair's ratio to a classical control pair.
//
// Two modes:
//   live    — real handshakes over TCP loopback against a local W-worker
//             server (or a remote host), warmup excluded, completions
//             windowed by timestamp.
//   modeled — deterministic closed form:
//               T = T_net + T_client + T_server
//               T_net    = rtt + bytes/bandwidth
//               T_client = t_keygen + t_verify + t_decap + t_kdf
//               T_server = t_encap + t_sign + t_kdf
//               cps      = min(C / T, W / T_server)
//             with per-op times cost_units x per_unit (default 1 us/unit)
//             and the same on-wire byte counts the live codec produces.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/crypto_suite.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/handshake.hpp"
#include "pqtls/registry.hpp"
#include "pqtls/transport.hpp"
#include "pqtls/wire.hpp"

namespace pqtls::bench {

inline constexpr std::uint64_t kKdfCostUnits = 2;

struct PairSpec {
  std::uint16_t kem = 0;
  std::uint16_t sig = 0;

  bool operator==(const PairSpec&) const = default;
};

struct BenchPlan {
  std::vector<PairSpec> pairs;
  PairSpec control{codes::mock_ecdhe_x25519, codes::mock_rsa2048};
  int clients = 8;          // C
  double duration_s = 5.0;  // D, measured window per repetition
  double warmup_s = 1.0;    // excluded from the window
  enum class Mode { live, modeled } mode = Mode::modeled;
  double rtt_s = 0.0;          // modeled network: round-trip time
  double bandwidth_bps = 0.0;  // modeled network: bytes/sec, 0 = unlimited
  int repetitions = 1;         // R
  int workers = 1;             // W: live server workers / modeled capacity
  double per_unit_s = 1e-6;    // seconds per cost unit
  std::uint64_t seed = 0;

  // live-mode endpoint; "self" launches a local server per pair.
  std::string host = "self";
  std::uint16_t port = 0;

  // identity shape shared by live servers and the modeled byte counts
  std::uint16_t root_sig_alg = codes::mock_dilithium2;
  std::string subject = "pqtls-server";
};

struct PairResult {
  PairSpec pair;
  std::string label;  // "<kem_name>+<sig_name>"
  std::string kem_name;
  std::string sig_name;
  bool is_control = false;
  std::uint64_t completed = 0;
  std::uint64_t failures = 0;
  double cps = 0.0;
  double ratio_to_control = 1.0;
  std::uint64_t p50_ns = 0;
  std::uint64_t p95_ns = 0;
  std::uint64_t bytes_per_handshake = 0;
  bool degraded = false;          // live: > 1% failed handshakes
  std::vector<double> rep_cps;    // per-repetition cps
};

struct BenchReport {
  std::string mode;  // "live" | "modeled"
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
  BenchPlan plan;
  std::vector<PairResult> rows;  // plan order; control present exactly once
};

// ---------------------------------------------------------------------------
// Plan validation and shared helpers
// ---------------------------------------------------------------------------

inline void validate_plan(const BenchPlan& plan, const Registry& reg) {
  if (plan.clients < 1) throw ConfigError("bench plan: clients must be >= 1");
  if (!(plan.duration_s > 0)) throw ConfigError("bench plan: duration must be > 0");
  if (plan.warmup_s < 0) throw ConfigError("bench plan: warmup must be >= 0");
  if (plan.repetitions < 1) throw ConfigError("bench plan: repetitions must be >= 1");
  if (plan.workers < 1) throw ConfigError("bench plan: workers must be >= 1");
  if (!(plan.per_unit_s > 0)) throw ConfigError("bench plan: per-unit time must be > 0");
  if (plan.rtt_s < 0 || plan.bandwidth_bps < 0)
    throw ConfigError("bench plan: network model values must be >= 0");
  auto check_pair = [&reg](const PairSpec& p, const char* what) {
    if (!reg.has_kem(p.kem))
      throw ConfigError(std::string("bench plan: ") + what + " KEM code " +
                        std::to_string(p.kem) + " is not a registered KEM");
    if (!reg.has_sig(p.sig))
      throw ConfigError(std::string("bench plan: ") + what + " SIG code " +
                        std::to_string(p.sig) + " is not a registered signature scheme");
  };
  for (const PairSpec& p : plan.pairs) check_pair(p, "benchmark");
  check_pair(plan.control, "control");
  if (!reg.has_sig(plan.root_sig_alg))
    throw ConfigError("bench plan: root_sig_alg is not a registered signature scheme");
}

// Exact on-wire byte count of one handshake (CH + SH + Finished frames),
// computed with the real codec on size-representative dummies so modeled
// and live reports agree byte-for-byte.
inline std::uint64_t handshake_bytes(const Registry& reg, const PairSpec& pair,
                                     std::uint16_t root_sig_alg, const std::string& subject) {
  const SchemeMetadata& kem = reg.meta(pair.kem);
  const SchemeMetadata& sig = reg.meta(pair.sig);
  const SchemeMetadata& root = reg.meta(root_sig_alg);

  wire::ClientHello ch;
  ch.kem_alg = pair.kem;
  ch.sig_algs = {pair.sig};
  ch.kem_public_key.assign(kem.pk_len, 0);

  wire::ServerHello sh;
  sh.chosen_kem = pair.kem;
  sh.chosen_sig = pair.sig;
  sh.certificate.subject = subject;
  sh.certificate.sig_alg = pair.sig;
  sh.certificate.subject_pk.assign(sig.pk_len, 0);
  sh.certificate.issuer_sig.assign(root.ct_or_sig_len, 0);
  sh.kem_ciphertext.assign(kem.ct_or_sig_len, 0);
  sh.signature.assign(sig.ct_or_sig_len, 0);

  return wire::encode_message(ch).size() + wire::encode_message(sh).size() +
         wire::encode_message(wire::Finished{}).size();
}

namespace detail {

inline std::string pair_label(const Registry& reg, const PairSpec& p) {
  return reg.meta(p.kem).id.name + "+" + reg.meta(p.sig).id.name;
}

// Report rows in plan order with the control appended when absent; exactly
// one row carries is_control.
inline std::vector<PairResult> make_rows(const BenchPlan& plan, const Registry& reg) {
  std::vector<PairResult> rows;
  bool control_listed = false;
  for (const PairSpec& p : plan.pairs) {
    PairResult row;
    row.pair = p;
    row.kem_name = reg.meta(p.kem).id.name;
    row.sig_name = reg.meta(p.sig).id.name;
    row.label = row.kem_name + "+" + row.sig_name;
    row.is_control = p == plan.control && !control_listed;
    control_listed = control_listed || row.is_control;
    rows.push_back(std::move(row));
  }
  if (!control_listed) {
    PairResult row;
    row.pair = plan.control;
    row.kem_name = reg.meta(plan.control.kem).id.name;
    row.sig_name = reg.meta(plan.control.sig).id.name;
    row.label = row.kem_name + "+" + row.sig_name;
    row.is_control = true;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void apply_ratios(std::vector<PairResult>& rows) {
  double control_cps = 0;
  for (const PairResult& r : rows)
    if (r.is_control) control_cps = r.cps;
  for (PairResult& r : rows) {
    if (r.is_control)
      r.ratio_to_control = 1.0;  // by definition, independent of noise
    else
      r.ratio_to_control = control_cps > 0 ? r.cps / control_cps : 0.0;
  }
}

inline std::uint64_t percentile_ns(std::vector<std::uint64_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
  return sorted[idx];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Modeled mode — a pure function of (plan, registry metadata)
// ---------------------------------------------------------------------------

inline BenchReport run_modeled(const BenchPlan& plan, const Registry& reg = default_registry()) {
  if (plan.mode != BenchPlan::Mode::modeled)
    throw ConfigError("run_modeled requires mode=modeled");
  validate_plan(plan, reg);

  BenchReport report;
  report.mode = "modeled";
  report.seed = plan.seed;
  report.plan = plan;
  report.rows = detail::make_rows(plan, reg);

  for (PairResult& row : report.rows) {
    const CostUnits& kem_cost = reg.meta(row.pair.kem).cost;
    const CostUnits& sig_cost = reg.meta(row.pair.sig).cost;
    row.bytes_per_handshake = handshake_bytes(reg, row.pair, plan.root_sig_alg, plan.subject);

    double t_server =
        static_cast<double>(kem_cost.encap_or_sign + sig_cost.encap_or_sign + kKdfCostUnits) *
        plan.per_unit_s;
    double t_client = static_cast<double>(kem_cost.keygen + sig_cost.decap_or_verify +
                                          kem_cost.decap_or_verify + kKdfCostUnits) *
                      plan.per_unit_s;
    double t_net = plan.rtt_s + (plan.bandwidth_bps > 0
                                     ? static_cast<double>(row.bytes_per_handshake) /
                                           plan.bandwidth_bps
                                     : 0.0);
    double total = t_net + t_client + t_server;

    double client_limited = static_cast<double>(plan.clients) / total;
    double capacity = t_server > 0 ? static_cast<double>(plan.workers) / t_server
                                   : client_limited;
    row.cps = std::min(client_limited, capacity);
    row.completed = static_cast<std::uint64_t>(std::llround(row.cps * plan.duration_s));
    row.p50_ns = static_cast<std::uint64_t>(std::llround(total * 1e9));
    row.p95_ns = row.p50_ns;
    row.rep_cps.assign(static_cast<std::size_t>(plan.repetitions), row.cps);
  }
  detail::apply_ratios(report.rows);
  return report;
}

// ---------------------------------------------------------------------------
// Live mode
// ---------------------------------------------------------------------------

namespace detail {

inline Bytes derive_seed(std::uint64_t base, std::uint32_t a, std::uint32_t b, std::uint32_t c,
                         std::uint64_t d) {
  Bytes in;
  for (int i = 7; i >= 0; --i) in.push_back(static_cast<std::uint8_t>(base >> (8 * i)));
  append_u32(in, a);
  append_u32(in, b);
  append_u32(in, c);
  for (int i = 7; i >= 0; --i) in.push_back(static_cast<std::uint8_t>(d >> (8 * i)));
  return hash::shake256(in, 32);
}

struct RepOutcome {
  std::uint64_t completed = 0;
  std::uint64_t failures = 0;
  std::uint64_t bytes_sample = 0;
  std::vector<std::uint64_t> latencies;
};

// One repetition: C client threads loop connect/handshake/close against
// `host:port` until the window ends; only handshakes that COMPLETE inside
// [start+warmup, start+warmup+duration) count.
inline RepOutcome run_rep(const Registry& reg, const BenchPlan& plan,
                          const handshake::ClientConfig& cfg, const std::string& host,
                          std::uint16_t port, std::uint32_t pair_idx, std::uint32_t rep) {
  using Clock = std::chrono::steady_clock;
  auto start = Clock::now();
  auto window_start = start + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(plan.warmup_s));
  auto window_end = window_start + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(plan.duration_s));

  std::vector<RepOutcome> per_client(static_cast<std::size_t>(plan.clients));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(plan.clients));
  for (int c = 0; c < plan.clients; ++c) {
    threads.emplace_back([&, c] {
      RepOutcome& mine = per_client[static_cast<std::size_t>(c)];
      std::uint64_t iter = 0;
      while (Clock::now() < window_end) {
        transport::ClientOptions opts;
        opts.rng_seed =
            derive_seed(plan.seed, pair_idx, rep, static_cast<std::uint32_t>(c), iter++);
        try {
          auto res = transport::connect_and_handshake(reg, cfg, host, port, opts);
          auto done = Clock::now();
          if (done >= window_start && done < window_end) {
            ++mine.completed;
            mine.latencies.push_back(res.stats.latency_ns);
            if (mine.bytes_sample == 0)
              mine.bytes_sample = res.stats.bytes_sent + res.stats.bytes_received;
          }
        } catch (const std::exception&) {
          auto done = Clock::now();
          if (done >= window_start && done < window_end) ++mine.failures;
        }
      }
    });
  }
  for (auto& t : threads) t.join();

  RepOutcome total;
  for (RepOutcome& pc : per_client) {
    total.completed += pc.completed;
    total.failures += pc.failures;
    if (total.bytes_sample == 0) total.bytes_sample = pc.bytes_sample;
    total.latencies.insert(total.latencies.end(), pc.latencies.begin(), pc.latencies.end());
  }
  return total;
}

}  // namespace detail

inline BenchReport run_live(const BenchPlan& plan, const Registry& reg = default_registry()) {
  if (plan.mode != BenchPlan::Mode::live) throw ConfigError("run_live requires mode=live");
  validate_plan(plan, reg);

  auto wall_start = std::chrono::steady_clock::now();
  BenchReport report;
  report.mode = "live";
  report.seed = plan.seed;
  report.plan = plan;
  report.rows = detail::make_rows(plan, reg);

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    PairResult& row = report.rows[i];
    std::vector<std::uint64_t> latencies;
    for (int rep = 0; rep < plan.repetitions; ++rep) {
      std::unique_ptr<transport::Server> server;
      std::string host = plan.host;
      std::uint16_t port = plan.port;
      handshake::ClientConfig cfg;
      cfg.kem_alg = row.pair.kem;
      cfg.sig_algs = {row.pair.sig};

      if (plan.host == "self") {
        transport::ServerConfig scfg;
        scfg.workers = plan.workers;
        scfg.max_connections = std::max<std::size_t>(256, static_cast<std::size_t>(plan.clients) * 4);
        scfg.sig_alg = row.pair.sig;
        scfg.root_sig_alg = plan.root_sig_alg;
        scfg.subject = plan.subject;
        scfg.registry = &reg;
        scfg.identity_seed =
            detail::derive_seed(plan.seed, static_cast<std::uint32_t>(i), 0xFFFF0001u,
                                static_cast<std::uint32_t>(rep), 0);
        scfg.root_seed = detail::derive_seed(plan.seed, 0xFFFF0002u, 0, 0, 0);
        scfg.rng_seed = detail::derive_seed(plan.seed, static_cast<std::uint32_t>(i),
                                            0xFFFF0003u, static_cast<std::uint32_t>(rep), 0);
        server = std::make_unique<transport::Server>(scfg);
        host = "127.0.0.1";
        port = server->port();
        cfg.anchor = server->anchor();
      } else {
        // Remote server: derive the anchor from the shared root seed.
        handshake::TrustRoot root = handshake::make_trust_root(
            reg, plan.root_sig_alg, detail::derive_seed(plan.seed, 0xFFFF0002u, 0, 0, 0));
        cfg.anchor = root.anchor;
      }

      detail::RepOutcome out = detail::run_rep(reg, plan, cfg, host, port,
                                               static_cast<std::uint32_t>(i),
                                               static_cast<std::uint32_t>(rep));
      if (server) server->stop();

      row.completed += out.completed;
      row.failures += out.failures;
      if (row.bytes_per_handshake == 0) row.bytes_per_handshake = out.bytes_sample;
      row.rep_cps.push_back(static_cast<double>(out.completed) / plan.duration_s);
      latencies.insert(latencies.end(), out.latencies.begin(), out.latencies.end());
    }

    double sum = 0;
    for (double c : row.rep_cps) sum += c;
    row.cps = sum / static_cast<double>(row.rep_cps.size());
    std::sort(latencies.begin(), latencies.end());
    row.p50_ns = detail::percentile_ns(latencies, 0.50);
    row.p95_ns = detail::percentile_ns(latencies, 0.95);
    if (row.bytes_per_handshake == 0)
      row.bytes_per_handshake = handshake_bytes(reg, row.pair, plan.root_sig_alg, plan.subject);
    std::uint64_t attempts = row.completed + row.failures;
    row.degraded = attempts > 0 && static_cast<double>(row.failures) >
                                       0.01 * static_cast<double>(attempts);
  }
  detail::apply_ratios(report.rows);
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      wall_start)
                            .count();
  return report;
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

enum class ReportFormat { csv, markdown, plotdata };

namespace detail {
inline std::string fmt_double(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
}  // namespace detail

inline std::string emit_report(const BenchReport& report, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::csv: {
      out += "pair,kem,sig,mode,completed,cps,ratio_to_control,p50_ns,p95_ns,"
             "bytes_per_handshake\n";
      for (const PairResult& r : report.rows) {
        out += r.label + ',' + r.kem_name + ',' + r.sig_name + ',' + report.mode + ',' +
               std::to_string(r.completed) + ',' + detail::fmt_double(r.cps, "%.3f") + ',' +
               detail::fmt_double(r.ratio_to_control, "%.6f") + ',' + std::to_string(r.p50_ns) +
               ',' + std::to_string(r.p95_ns) + ',' + std::to_string(r.bytes_per_handshake) +
               '\n';
      }
      break;
    }
    case ReportFormat::markdown: {
      out += "# Handshake benchmark (" + report.mode + " mode, seed " +
             std::to_string(report.seed) + ")\n\n";
      out += "| pair | kem | sig | completed | cps | ratio to control | p50 (ns) | p95 (ns) | "
             "bytes | flags |\n";
      out += "|---|---|---|---|---|---|---|---|---|---|\n";
      for (const PairResult& r : report.rows) {
        std::string flags;
        if (r.is_control) flags += "control";
        if (r.degraded) flags += flags.empty() ? "degraded" : ", degraded";
        out += "| " + r.label + " | " + r.kem_name + " | " + r.sig_name + " | " +
               std::to_string(r.completed) + " | " + detail::fmt_double(r.cps, "%.3f") + " | " +
               detail::fmt_double(r.ratio_to_control, "%.6f") + " | " +
               std::to_string(r.p50_ns) + " | " + std::to_string(r.p95_ns) + " | " +
               std::to_string(r.bytes_per_handshake) + " | " + flags + " |\n";
      }
      break;
    }
    case ReportFormat::plotdata: {
      for (const PairResult& r : report.rows)
        out += r.label + '\t' + detail::fmt_double(r.ratio_to_control, "%.6f") + '\n';
      break;
    }
  }
  return out;
}

}  // namespace pqtls::bench
