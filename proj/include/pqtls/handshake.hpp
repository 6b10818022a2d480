// The handshake state machine: CH -> SH -> Finished with transcript
// signing, KEM-based key agreement, an HMAC key schedule, and a depth-1
// certificate chain.
//
// Flow (single round trip plus the client's Finished flight):
//   client: ClientHello carries a fresh ephemeral KEM public key
//   server: encapsulates to it, signs the transcript, derives keys
//   client: verifies certificate then signature, decapsulates, derives keys,
//           sends Finished = HMAC(client_finished_key, TH2)
//   server: checks the Finished MAC
//
// The transcript signature covers the public transcript (both randoms, the
// certificate, and the ciphertext that determines the shared secret), not
// the secret itself.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/crypto_suite.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/hash.hpp"
#include "pqtls/wire.hpp"

namespace pqtls::handshake {

// A protocol abort raised locally: carries the alert the peer must be sent.
class HandshakeAlert : public Error {
 public:
  HandshakeAlert(wire::AlertCode code, std::string detail)
      : Error(std::string(wire::to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  wire::AlertCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  wire::AlertCode code_;
  std::string detail_;
};

// An alert frame received from the peer.
class AlertReceivedError : public Error {
 public:
  AlertReceivedError(wire::AlertCode code, std::string detail)
      : Error(std::string("peer alert ") + wire::to_string(code) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  wire::AlertCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  wire::AlertCode code_;
  std::string detail_;
};

struct SessionKeys {
  std::array<std::uint8_t, 32> client_traffic{};
  std::array<std::uint8_t, 32> server_traffic{};
  std::array<std::uint8_t, 32> client_finished_key{};
  std::array<std::uint8_t, 32> server_finished_key{};

  bool operator==(const SessionKeys&) const = default;
};

// Per-phase wall-clock costs, nanoseconds. Each side fills the phases it
// runs: client keygen/verify/decap/kdf, server encap/sign/kdf.
struct HandshakeTimings {
  std::uint64_t keygen_ns = 0;
  std::uint64_t kem_ns = 0;  // encap (server) or decap (client)
  std::uint64_t sig_ns = 0;  // sign (server) or verify (client)
  std::uint64_t kdf_ns = 0;
};

namespace detail {

class PhaseTimer {
 public:
  PhaseTimer() : start_(std::chrono::steady_clock::now()) {}
  std::uint64_t lap() {
    auto now = std::chrono::steady_clock::now();
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(now - start_).count();
    start_ = now;
    return static_cast<std::uint64_t>(ns);
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Stretches a 32-byte seed into two tagged 32-byte values.
inline std::pair<std::array<std::uint8_t, 32>, Bytes> split_seed(BytesView seed,
                                                                 std::uint8_t tag) {
  Bytes stream = hash::shake256(concat(seed, Bytes{tag}), 64);
  std::array<std::uint8_t, 32> first;
  std::copy_n(stream.begin(), 32, first.begin());
  return {first, Bytes(stream.begin() + 32, stream.end())};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Key schedule
// ---------------------------------------------------------------------------

// prk = HMAC-SHA-256(key = transcript_hash, msg = ss);
// each output key = HMAC-SHA-256(prk, label || 0x01).
inline SessionKeys key_schedule(BytesView ss, BytesView transcript_hash) {
  if (ss.size() != 32) throw WrongLengthError("key_schedule: shared secret must be 32 bytes");
  if (transcript_hash.size() != 32)
    throw WrongLengthError("key_schedule: transcript hash must be 32 bytes");
  auto prk = hash::hmac_sha256(transcript_hash, ss);
  auto derive = [&prk](std::string_view label) {
    return hash::hmac_sha256(prk, concat(view(label), Bytes{0x01}));
  };
  SessionKeys keys;
  keys.client_traffic = derive("pqtls c traffic");
  keys.server_traffic = derive("pqtls s traffic");
  keys.client_finished_key = derive("pqtls c finished");
  keys.server_finished_key = derive("pqtls s finished");
  return keys;
}

// ---------------------------------------------------------------------------
// Certificates (chain depth exactly 1: root -> server)
// ---------------------------------------------------------------------------

struct TrustAnchor {
  std::uint16_t sig_alg = 0;  // the root's own signature algorithm
  Bytes root_pk;
};

struct TrustRoot {
  TrustAnchor anchor;
  SigKeyPair keypair;
};

inline TrustRoot make_trust_root(const Registry& reg, std::uint16_t sig_alg, BytesView seed) {
  TrustRoot root;
  root.keypair = reg.sig(sig_alg).keygen(seed);
  root.anchor.sig_alg = sig_alg;
  root.anchor.root_pk = root.keypair.public_key;
  return root;
}

// The byte string the issuer signs: subject || sig_alg:u16 || subject_pk.
inline Bytes cert_signing_input(const wire::Certificate& c) {
  Bytes out;
  append(out, view(c.subject));
  append_u16(out, c.sig_alg);
  append(out, c.subject_pk);
  return out;
}

inline wire::Certificate cert_issue(const Registry& reg, const TrustRoot& root,
                                    std::string subject, std::uint16_t subject_sig_alg,
                                    BytesView subject_pk) {
  wire::Certificate cert;
  cert.subject = std::move(subject);
  cert.sig_alg = subject_sig_alg;
  cert.subject_pk.assign(subject_pk.begin(), subject_pk.end());
  cert.issuer_sig =
      reg.sig(root.anchor.sig_alg).sign(root.keypair.secret_key, cert_signing_input(cert));
  return cert;
}

// False on any mismatch, including wrong-length fields (the certificate is
// attacker-controlled wire data, so length errors are verification failures
// rather than exceptions).
inline bool cert_verify(const Registry& reg, const TrustAnchor& anchor,
                        const wire::Certificate& cert) {
  if (!reg.has_sig(anchor.sig_alg)) return false;
  try {
    return reg.sig(anchor.sig_alg)
        .verify(anchor.root_pk, cert_signing_input(cert), cert.issuer_sig);
  } catch (const WrongLengthError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct ClientConfig {
  std::uint16_t kem_alg = 0;
  std::vector<std::uint16_t> sig_algs;  // preference order, first = most preferred
  TrustAnchor anchor;
};

struct ClientPending {
  ClientConfig config;
  wire::ClientHello hello;
  Bytes ch_payload;  // encoded CH payload, the transcript prefix
  Bytes kem_secret_key;
  HandshakeTimings timings;
};

inline ClientPending client_begin(const Registry& reg, const ClientConfig& cfg,
                                  BytesView rng_seed) {
  if (cfg.sig_algs.empty()) throw ConfigError("client config offers no signature algorithms");
  if (cfg.sig_algs.size() > wire::kMaxSigAlgs)
    throw ConfigError("client config offers more than 8 signature algorithms");
  if (!reg.has_kem(cfg.kem_alg))
    throw UnknownAlgorithmError("client config kem_alg is not a registered KEM");
  if (rng_seed.size() != 32) throw WrongLengthError("client_begin: rng_seed must be 32 bytes");

  ClientPending pending;
  pending.config = cfg;
  auto [client_random, kem_seed] = detail::split_seed(rng_seed, 0xC0);

  detail::PhaseTimer timer;
  KemKeyPair kp = reg.kem(cfg.kem_alg).keygen(kem_seed);
  pending.timings.keygen_ns = timer.lap();

  pending.hello.version = wire::kVersion;
  pending.hello.client_random = client_random;
  pending.hello.kem_alg = cfg.kem_alg;
  pending.hello.sig_algs = cfg.sig_algs;
  pending.hello.kem_public_key = std::move(kp.public_key);
  pending.kem_secret_key = std::move(kp.secret_key);
  pending.ch_payload = wire::encode_payload(pending.hello);
  return pending;
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServerIdentity {
  std::uint16_t sig_alg = 0;
  SigKeyPair keypair;
  wire::Certificate certificate;
};

inline ServerIdentity make_server_identity(const Registry& reg, std::uint16_t sig_alg,
                                           BytesView seed, std::string subject,
                                           const TrustRoot& root) {
  ServerIdentity id;
  id.sig_alg = sig_alg;
  id.keypair = reg.sig(sig_alg).keygen(seed);
  id.certificate = cert_issue(reg, root, std::move(subject), sig_alg, id.keypair.public_key);
  return id;
}

// Test-only fault injection. `ciphertext_xor` flips bits of the ciphertext
// AFTER encapsulation but BEFORE the transcript is signed, so the signature
// still verifies and the damage surfaces only as a key mismatch (the
// server's Finished check fails with bad_finished).
struct ServerFaults {
  std::optional<std::pair<std::size_t, std::uint8_t>> ciphertext_xor;  // (index, mask != 0)
};

struct ServerResult {
  wire::ServerHello hello;
  SessionKeys keys;
  Bytes sh_payload;                  // full encoded SH payload
  std::array<std::uint8_t, 32> th2;  // SHA3-256(CH payload || SH payload)
  HandshakeTimings timings;
};

inline ServerResult server_respond(const Registry& reg, const ServerIdentity& id,
                                   const wire::ClientHello& ch, BytesView rng_seed,
                                   const ServerFaults& faults = {}) {
  if (rng_seed.size() != 32) throw WrongLengthError("server_respond: rng_seed must be 32 bytes");
  if (!reg.has_kem(ch.kem_alg))
    throw HandshakeAlert(wire::AlertCode::unsupported_algorithm,
                         "unknown KEM code " + std::to_string(ch.kem_alg));
  const KemProvider& kem = reg.kem(ch.kem_alg);
  if (ch.kem_public_key.size() != kem.meta().pk_len)
    throw HandshakeAlert(wire::AlertCode::decode_error, "kem public key length mismatch");

  // First client-offered signature algorithm we can serve; the identity
  // holds exactly one signing key.
  bool sig_ok = false;
  for (std::uint16_t s : ch.sig_algs) sig_ok = sig_ok || s == id.sig_alg;
  if (!sig_ok)
    throw HandshakeAlert(wire::AlertCode::unsupported_algorithm,
                         "no mutually supported signature algorithm");

  auto [server_random, encap_rand] = detail::split_seed(rng_seed, 0x51);

  ServerResult out;
  out.hello.version = wire::kVersion;
  out.hello.server_random = server_random;
  out.hello.chosen_kem = ch.kem_alg;
  out.hello.chosen_sig = id.sig_alg;
  out.hello.certificate = id.certificate;

  detail::PhaseTimer timer;
  auto [ct, ss] = kem.encap(ch.kem_public_key, encap_rand);
  out.timings.kem_ns = timer.lap();
  if (faults.ciphertext_xor) {
    auto [index, mask] = *faults.ciphertext_xor;
    ct[index % ct.size()] ^= mask;
  }
  out.hello.kem_ciphertext = std::move(ct);

  Bytes ch_payload = wire::encode_payload(ch);
  Bytes sh_prefix = wire::encode_server_hello_prefix(out.hello);
  auto th1 = hash::sha3_256(concat(ch_payload, sh_prefix));
  timer.lap();
  out.hello.signature = reg.sig(id.sig_alg).sign(id.keypair.secret_key, th1);
  out.timings.sig_ns = timer.lap();

  out.sh_payload = wire::encode_payload(out.hello);
  out.th2 = hash::sha3_256(concat(ch_payload, out.sh_payload));
  timer.lap();
  out.keys = key_schedule(ss, out.th2);
  out.timings.kdf_ns = timer.lap();
  return out;
}

inline void server_process_finished(const ServerResult& state, const wire::Finished& fin) {
  auto expected = hash::hmac_sha256(state.keys.client_finished_key, state.th2);
  if (!ct_equal(expected, fin.mac))
    throw HandshakeAlert(wire::AlertCode::bad_finished, "finished MAC mismatch");
}

// ---------------------------------------------------------------------------
// Client, second flight
// ---------------------------------------------------------------------------

struct ClientResult {
  SessionKeys keys;
  wire::Finished finished;
  std::array<std::uint8_t, 32> th2;
  HandshakeTimings timings;
};

// Verification order is fixed and observable through the op counters:
// (1) certificate against the trust anchor -> bad_certificate
// (2) transcript signature with the certificate's key -> bad_signature
// (3) decapsulation (never fails; implicit rejection)
// (4) key schedule
// (5) Finished MAC emission
inline ClientResult client_process_server_hello(const Registry& reg, ClientPending& pending,
                                                const wire::ServerHello& sh) {
  if (sh.chosen_kem != pending.hello.kem_alg)
    throw HandshakeAlert(wire::AlertCode::unsupported_algorithm,
                         "server chose a KEM the client did not offer");
  bool offered = false;
  for (std::uint16_t s : pending.hello.sig_algs) offered = offered || s == sh.chosen_sig;
  if (!offered)
    throw HandshakeAlert(wire::AlertCode::unsupported_algorithm,
                         "server chose a signature algorithm the client did not offer");
  if (!reg.has_sig(sh.chosen_sig))
    throw HandshakeAlert(wire::AlertCode::unsupported_algorithm,
                         "chosen signature algorithm not registered");
  const KemProvider& kem = reg.kem(sh.chosen_kem);
  if (sh.kem_ciphertext.size() != kem.meta().ct_or_sig_len)
    throw HandshakeAlert(wire::AlertCode::decode_error, "kem ciphertext length mismatch");

  // (1) certificate
  if (sh.certificate.sig_alg != sh.chosen_sig)
    throw HandshakeAlert(wire::AlertCode::bad_certificate,
                         "certificate does not cover the chosen signature algorithm");
  if (!cert_verify(reg, pending.config.anchor, sh.certificate))
    throw HandshakeAlert(wire::AlertCode::bad_certificate, "certificate verification failed");

  // (2) transcript signature
  ClientResult out;
  Bytes sh_prefix = wire::encode_server_hello_prefix(sh);
  auto th1 = hash::sha3_256(concat(pending.ch_payload, sh_prefix));
  detail::PhaseTimer timer;
  bool sig_ok;
  try {
    sig_ok = reg.sig(sh.chosen_sig).verify(sh.certificate.subject_pk, th1, sh.signature);
  } catch (const WrongLengthError&) {
    sig_ok = false;
  }
  out.timings.sig_ns = timer.lap();
  if (!sig_ok)
    throw HandshakeAlert(wire::AlertCode::bad_signature, "transcript signature invalid");

  // (3) decapsulation
  timer.lap();
  Bytes ss = kem.decap(pending.kem_secret_key, sh.kem_ciphertext);
  out.timings.kem_ns = timer.lap();

  // (4) keys, (5) Finished
  Bytes sh_payload = wire::encode_payload(sh);
  out.th2 = hash::sha3_256(concat(pending.ch_payload, sh_payload));
  timer.lap();
  out.keys = key_schedule(ss, out.th2);
  out.timings.kdf_ns = timer.lap();
  out.timings.keygen_ns = pending.timings.keygen_ns;
  out.finished.mac = hash::hmac_sha256(out.keys.client_finished_key, out.th2);
  return out;
}

}  // namespace pqtls::handshake
