// KEM and signature provider contracts, the algorithm registry, and the
// deterministic mock providers.
//
// Mock providers are INSECURE by construction and exist only to exercise the
// handshake protocol and the benchmark harness. They produce outputs of
// exactly the byte sizes published for the real scheme they stand in for,
// and burn a configurable number of iterated hash compressions per
// operation so that relative compute costs can be calibrated.
#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/hash.hpp"

namespace pqtls {

enum class AlgKind : std::uint8_t { kem, sig };

inline const char* to_string(AlgKind k) { return k == AlgKind::kem ? "KEM" : "SIG"; }

struct AlgorithmId {
  AlgKind kind = AlgKind::kem;
  std::string name;
  std::uint16_t wire_code = 0;

  bool operator==(const AlgorithmId&) const = default;
};

// Synthetic per-operation costs in mock hash-iterations. `encap_or_sign` and
// `decap_or_verify` are the two halves of the online handshake work.
struct CostUnits {
  std::uint64_t keygen = 0;
  std::uint64_t encap_or_sign = 0;
  std::uint64_t decap_or_verify = 0;
};

struct SchemeMetadata {
  AlgorithmId id;
  std::size_t pk_len = 0;
  std::size_t sk_len = 0;
  std::size_t ct_or_sig_len = 0;  // ciphertext (KEM) or signature (SIG)
  std::size_t ss_len = 0;         // KEM shared secret; fixed at 32
  CostUnits cost;
};

inline constexpr std::size_t kSharedSecretLen = 32;
inline constexpr std::size_t kSeedLen = 32;

struct KemKeyPair {
  Bytes public_key;
  Bytes secret_key;
  AlgorithmId alg;
};

struct SigKeyPair {
  Bytes public_key;
  Bytes secret_key;
  AlgorithmId alg;
};

// Global operation counters. Tests use these to pin down call ordering
// (e.g. "no decapsulation happened before the signature check failed").
struct OpCounters {
  std::atomic<std::uint64_t> kem_keygen{0};
  std::atomic<std::uint64_t> kem_encap{0};
  std::atomic<std::uint64_t> kem_decap{0};
  std::atomic<std::uint64_t> sig_keygen{0};
  std::atomic<std::uint64_t> sig_sign{0};
  std::atomic<std::uint64_t> sig_verify{0};

  void reset() {
    kem_keygen = 0;
    kem_encap = 0;
    kem_decap = 0;
    sig_keygen = 0;
    sig_sign = 0;
    sig_verify = 0;
  }
};

inline OpCounters& op_counters() {
  static OpCounters c;
  return c;
}

namespace detail {
inline void require_len(BytesView data, std::size_t expected, const char* what) {
  if (data.size() != expected)
    throw WrongLengthError(std::string(what) + ": got " + std::to_string(data.size()) +
                           " bytes, expected " + std::to_string(expected));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Provider contracts. The public entry points validate input lengths against
// the scheme metadata, bump the op counters, and check output lengths; the
// virtual do_* hooks contain the scheme itself. All providers must be
// deterministic functions of their inputs (the stateful hash-based signer is
// the one documented exception and synchronizes internally).
// ---------------------------------------------------------------------------

class KemProvider {
 public:
  virtual ~KemProvider() = default;

  const SchemeMetadata& meta() const { return meta_; }

  KemKeyPair keygen(BytesView seed) const {
    detail::require_len(seed, kSeedLen, "kem seed");
    op_counters().kem_keygen.fetch_add(1, std::memory_order_relaxed);
    KemKeyPair kp = do_keygen(seed);
    kp.alg = meta_.id;
    check_out(kp.public_key.size() == meta_.pk_len && kp.secret_key.size() == meta_.sk_len);
    return kp;
  }

  // Returns (ciphertext, shared_secret).
  std::pair<Bytes, Bytes> encap(BytesView pk, BytesView randomness) const {
    detail::require_len(pk, meta_.pk_len, "kem public key");
    detail::require_len(randomness, kSeedLen, "encap randomness");
    op_counters().kem_encap.fetch_add(1, std::memory_order_relaxed);
    auto [ct, ss] = do_encap(pk, randomness);
    check_out(ct.size() == meta_.ct_or_sig_len && ss.size() == meta_.ss_len);
    return {std::move(ct), std::move(ss)};
  }

  // Never rejects a well-sized ciphertext; tampered inputs produce a
  // deterministic implicit-rejection secret.
  Bytes decap(BytesView sk, BytesView ct) const {
    detail::require_len(sk, meta_.sk_len, "kem secret key");
    detail::require_len(ct, meta_.ct_or_sig_len, "kem ciphertext");
    op_counters().kem_decap.fetch_add(1, std::memory_order_relaxed);
    Bytes ss = do_decap(sk, ct);
    check_out(ss.size() == meta_.ss_len);
    return ss;
  }

 protected:
  explicit KemProvider(SchemeMetadata meta) : meta_(std::move(meta)) {}

  virtual KemKeyPair do_keygen(BytesView seed) const = 0;
  virtual std::pair<Bytes, Bytes> do_encap(BytesView pk, BytesView randomness) const = 0;
  virtual Bytes do_decap(BytesView sk, BytesView ct) const = 0;

 private:
  static void check_out(bool ok) {
    if (!ok) throw std::logic_error("provider produced output with wrong length");
  }

  SchemeMetadata meta_;
};

class SigProvider {
 public:
  virtual ~SigProvider() = default;

  const SchemeMetadata& meta() const { return meta_; }

  SigKeyPair keygen(BytesView seed) const {
    detail::require_len(seed, kSeedLen, "sig seed");
    op_counters().sig_keygen.fetch_add(1, std::memory_order_relaxed);
    SigKeyPair kp = do_keygen(seed);
    kp.alg = meta_.id;
    check_out(kp.public_key.size() == meta_.pk_len && kp.secret_key.size() == meta_.sk_len);
    return kp;
  }

  Bytes sign(BytesView sk, BytesView message) const {
    detail::require_len(sk, meta_.sk_len, "sig secret key");
    op_counters().sig_sign.fetch_add(1, std::memory_order_relaxed);
    Bytes sig = do_sign(sk, message);
    check_out(sig.size() == meta_.ct_or_sig_len);
    return sig;
  }

  // False on any content mismatch; throws only for wrong input lengths.
  bool verify(BytesView pk, BytesView message, BytesView signature) const {
    detail::require_len(pk, meta_.pk_len, "sig public key");
    detail::require_len(signature, meta_.ct_or_sig_len, "signature");
    op_counters().sig_verify.fetch_add(1, std::memory_order_relaxed);
    return do_verify(pk, message, signature);
  }

 protected:
  explicit SigProvider(SchemeMetadata meta) : meta_(std::move(meta)) {}

  virtual SigKeyPair do_keygen(BytesView seed) const = 0;
  virtual Bytes do_sign(BytesView sk, BytesView message) const = 0;
  virtual bool do_verify(BytesView pk, BytesView message, BytesView signature) const = 0;

 private:
  static void check_out(bool ok) {
    if (!ok) throw std::logic_error("provider produced output with wrong length");
  }

  SchemeMetadata meta_;
};

// ---------------------------------------------------------------------------
// Mock providers. Deterministic, correct by construction, INSECURE.
//
//   KEM:  sk = seed
//         pk = XOF(sk || 0x01, pk_len)
//         encap(pk, r):  ct = r || XOF(r || 0x02, ct_len - 32),  ss = H(pk || r)
//         decap(sk, ct): recompute pk, ss = H(pk || ct[0..32])
//   SIG:  sk = seed
//         pk = seed || XOF(seed || 0x03, pk_len - 32)   (pk embeds the seed
//              so the verifier can recompute; that is the insecurity)
//         sign(sk, m):   tag = HMAC(seed, m), sig = tag || XOF(tag, sig_len - 32)
//         verify: recompute the full signature from pk[0..32] and compare
// ---------------------------------------------------------------------------

class MockKem final : public KemProvider {
 public:
  explicit MockKem(SchemeMetadata meta) : KemProvider(std::move(meta)) {
    if (this->meta().ct_or_sig_len < 32 || this->meta().sk_len != kSeedLen)
      throw ConfigError("mock KEM needs ct_len >= 32 and sk_len == 32");
  }

 private:
  KemKeyPair do_keygen(BytesView seed) const override {
    hash::burn_units(meta().cost.keygen);
    KemKeyPair kp;
    kp.secret_key.assign(seed.begin(), seed.end());
    kp.public_key = derive_pk(seed);
    return kp;
  }

  std::pair<Bytes, Bytes> do_encap(BytesView pk, BytesView r) const override {
    hash::burn_units(meta().cost.encap_or_sign);
    Bytes tail = hash::shake128(concat(r, Bytes{0x02}), meta().ct_or_sig_len - 32);
    Bytes ct = concat(r, tail);
    auto ss = hash::sha3_256(concat(pk, r));
    return {std::move(ct), Bytes(ss.begin(), ss.end())};
  }

  Bytes do_decap(BytesView sk, BytesView ct) const override {
    hash::burn_units(meta().cost.decap_or_verify);
    Bytes pk = derive_pk(sk);
    auto ss = hash::sha3_256(concat(pk, ct.first(32)));
    return Bytes(ss.begin(), ss.end());
  }

  Bytes derive_pk(BytesView seed) const {
    return hash::shake128(concat(seed, Bytes{0x01}), meta().pk_len);
  }
};

class MockSig final : public SigProvider {
 public:
  explicit MockSig(SchemeMetadata meta) : SigProvider(std::move(meta)) {
    if (this->meta().pk_len < 32 || this->meta().ct_or_sig_len < 32 ||
        this->meta().sk_len != kSeedLen)
      throw ConfigError("mock SIG needs pk_len >= 32, sig_len >= 32, sk_len == 32");
  }

 private:
  SigKeyPair do_keygen(BytesView seed) const override {
    hash::burn_units(meta().cost.keygen);
    SigKeyPair kp;
    kp.secret_key.assign(seed.begin(), seed.end());
    kp.public_key = concat(seed, hash::shake128(concat(seed, Bytes{0x03}), meta().pk_len - 32));
    return kp;
  }

  Bytes do_sign(BytesView sk, BytesView message) const override {
    hash::burn_units(meta().cost.encap_or_sign);
    return signature_for(sk, message);
  }

  bool do_verify(BytesView pk, BytesView message, BytesView signature) const override {
    hash::burn_units(meta().cost.decap_or_verify);
    Bytes expected = signature_for(pk.first(32), message);
    return ct_equal(expected, signature);
  }

  Bytes signature_for(BytesView seed, BytesView message) const {
    auto tag = hash::hmac_sha256(seed, message);
    return concat(tag, hash::shake128(tag, meta().ct_or_sig_len - 32));
  }
};

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

class Registry {
 public:
  void add_kem(std::shared_ptr<KemProvider> p) {
    const SchemeMetadata& m = p->meta();
    if (m.id.kind != AlgKind::kem || m.ss_len != kSharedSecretLen)
      throw ConfigError("KEM metadata invalid: " + m.id.name);
    insert(m, std::move(p), nullptr);
  }

  void add_sig(std::shared_ptr<SigProvider> p) {
    const SchemeMetadata& m = p->meta();
    if (m.id.kind != AlgKind::sig) throw ConfigError("SIG metadata invalid: " + m.id.name);
    insert(m, nullptr, std::move(p));
  }

  bool has(std::uint16_t code) const { return entries_.count(code) != 0; }

  bool has_kem(std::uint16_t code) const {
    auto it = entries_.find(code);
    return it != entries_.end() && it->second.kem != nullptr;
  }

  bool has_sig(std::uint16_t code) const {
    auto it = entries_.find(code);
    return it != entries_.end() && it->second.sig != nullptr;
  }

  const SchemeMetadata& meta(std::uint16_t code) const { return find(code).meta; }

  const KemProvider& kem(std::uint16_t code) const {
    const Entry& e = find(code);
    if (!e.kem)
      throw UnknownAlgorithmError("algorithm " + e.meta.id.name + " is not a KEM");
    return *e.kem;
  }

  const SigProvider& sig(std::uint16_t code) const {
    const Entry& e = find(code);
    if (!e.sig)
      throw UnknownAlgorithmError("algorithm " + e.meta.id.name + " is not a signature scheme");
    return *e.sig;
  }

  // Shared handles, for composing filtered registries that reuse providers
  // (and thus any provider-held state, e.g. stateful signing keys).
  std::shared_ptr<KemProvider> share_kem(std::uint16_t code) const {
    const Entry& e = find(code);
    if (!e.kem)
      throw UnknownAlgorithmError("algorithm " + e.meta.id.name + " is not a KEM");
    return e.kem;
  }

  std::shared_ptr<SigProvider> share_sig(std::uint16_t code) const {
    const Entry& e = find(code);
    if (!e.sig)
      throw UnknownAlgorithmError("algorithm " + e.meta.id.name + " is not a signature scheme");
    return e.sig;
  }

  std::uint16_t code_of(const std::string& name) const {
    for (const auto& [code, e] : entries_)
      if (e.meta.id.name == name) return code;
    throw UnknownAlgorithmError("unknown algorithm name: " + name);
  }

  std::vector<const SchemeMetadata*> list() const {
    std::vector<const SchemeMetadata*> out;
    out.reserve(entries_.size());
    for (const auto& [code, e] : entries_) out.push_back(&e.meta);
    return out;  // std::map keeps wire_code order
  }

  // One CSV line per algorithm, ascending wire_code, with a header row.
  std::string dump_csv() const {
    std::ostringstream os;
    os << "wire_code,name,kind,pk_len,sk_len,ct_or_sig_len,cost_keygen,cost_op,cost_verify\n";
    for (const auto& [code, e] : entries_) {
      const SchemeMetadata& m = e.meta;
      os << code << ',' << m.id.name << ',' << to_string(m.id.kind) << ',' << m.pk_len << ','
         << m.sk_len << ',' << m.ct_or_sig_len << ',' << m.cost.keygen << ','
         << m.cost.encap_or_sign << ',' << m.cost.decap_or_verify << '\n';
    }
    return os.str();
  }

 private:
  struct Entry {
    SchemeMetadata meta;
    std::shared_ptr<KemProvider> kem;
    std::shared_ptr<SigProvider> sig;
  };

  const Entry& find(std::uint16_t code) const {
    auto it = entries_.find(code);
    if (it == entries_.end())
      throw UnknownAlgorithmError("unregistered wire code " + std::to_string(code));
    return it->second;
  }

  void insert(const SchemeMetadata& m, std::shared_ptr<KemProvider> kem,
              std::shared_ptr<SigProvider> sig) {
    if (entries_.count(m.id.wire_code))
      throw ConfigError("duplicate wire code " + std::to_string(m.id.wire_code));
    for (const auto& [code, e] : entries_)
      if (e.meta.id.name == m.id.name) throw ConfigError("duplicate algorithm name " + m.id.name);
    entries_.emplace(m.id.wire_code, Entry{m, std::move(kem), std::move(sig)});
  }

  std::map<std::uint16_t, Entry> entries_;
};

// Wire codes of the stock algorithms.
namespace codes {
inline constexpr std::uint16_t toy_mlkem512 = 0x0101;
inline constexpr std::uint16_t mock_kyber512 = 0x0102;
inline constexpr std::uint16_t mock_kyber768 = 0x0103;
inline constexpr std::uint16_t mock_ecdhe_x25519 = 0x0110;
inline constexpr std::uint16_t toy_wots_merkle = 0x0201;
inline constexpr std::uint16_t mock_dilithium2 = 0x0202;
inline constexpr std::uint16_t mock_falcon512 = 0x0203;
inline constexpr std::uint16_t mock_sphincs128s = 0x0204;
inline constexpr std::uint16_t mock_rsa2048 = 0x0210;
}  // namespace codes

inline SchemeMetadata make_meta(AlgKind kind, std::string name, std::uint16_t code,
                                std::size_t pk, std::size_t sk, std::size_t ct_or_sig,
                                CostUnits cost) {
  SchemeMetadata m;
  m.id = AlgorithmId{kind, std::move(name), code};
  m.pk_len = pk;
  m.sk_len = sk;
  m.ct_or_sig_len = ct_or_sig;
  m.ss_len = kind == AlgKind::kem ? kSharedSecretLen : 0;
  m.cost = cost;
  return m;
}

// Mock metadata defaults. Byte sizes follow the published parameter tables
// of the scheme each mock stands in for (Kyber512/768, x25519, Dilithium2,
// Falcon-512, SPHINCS+-128s, RSA-2048 signatures). Cost units are
// calibration knobs, not measurements: they are chosen so that the relative
// per-operation ordering matches the qualitative behavior of the real
// schemes (hash-based signing is by far the heaviest, the classical control
// pays for its big-integer signature, lattice verify is cheap).
inline std::vector<SchemeMetadata> default_mock_metadata() {
  return {
      make_meta(AlgKind::kem, "kem.mock.kyber512", codes::mock_kyber512, 800, 32, 768,
                {80, 100, 120}),
      make_meta(AlgKind::kem, "kem.mock.kyber768", codes::mock_kyber768, 1184, 32, 1088,
                {120, 140, 160}),
      make_meta(AlgKind::kem, "kem.mock.ecdhe_x25519", codes::mock_ecdhe_x25519, 32, 32, 32,
                {60, 70, 60}),
      make_meta(AlgKind::sig, "sig.mock.dilithium2", codes::mock_dilithium2, 1312, 32, 2420,
                {300, 700, 250}),
      make_meta(AlgKind::sig, "sig.mock.falcon512", codes::mock_falcon512, 897, 32, 666,
                {20000, 550, 80}),
      make_meta(AlgKind::sig, "sig.mock.sphincs128s", codes::mock_sphincs128s, 32, 32, 7856,
                {5000, 30000, 1500}),
      make_meta(AlgKind::sig, "sig.mock.rsa2048", codes::mock_rsa2048, 270, 32, 256,
                {150000, 1700, 60}),
  };
}

}  // namespace pqtls
