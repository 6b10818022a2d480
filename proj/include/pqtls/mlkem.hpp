// A working Module-LWE KEM with the ML-KEM-512 parameter shape: 7-layer
// incomplete NTT over Z_3329[X]/(X^256+1), centered-binomial noise,
// coefficient compression, and an FO transform with implicit rejection.
//
// This is the "real" (non-mock) KEM provider of the suite. It is a toy in
// the sense that it makes no constant-time or side-channel claims; the
// arithmetic itself is exact.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>

#include "pqtls/bytes.hpp"
#include "pqtls/crypto_suite.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/hash.hpp"

namespace pqtls::mlkem {

// ---------------------------------------------------------------------------
// Parameters (level-1 shape, k=2)
// ---------------------------------------------------------------------------

inline constexpr int kN = 256;
inline constexpr std::uint32_t kQ = 3329;
inline constexpr int kK = 2;
inline constexpr int kEta1 = 3;
inline constexpr int kEta2 = 2;
inline constexpr int kDu = 10;
inline constexpr int kDv = 4;
inline constexpr std::uint32_t kZeta = 17;

inline constexpr std::size_t kMsgLen = 32;
inline constexpr std::size_t kPkeEkLen = 12 * kK * kN / 8 + 32;          // 800
inline constexpr std::size_t kPkeDkLen = 12 * kK * kN / 8;               // 768
inline constexpr std::size_t kCtLen = (kDu * kK * kN + kDv * kN) / 8;    // 768
inline constexpr std::size_t kKemDkLen = kPkeDkLen + kPkeEkLen + 32 + 32;  // 1632

constexpr std::uint16_t pow_mod(std::uint32_t base, std::uint32_t exp) {
  std::uint32_t r = 1, b = base % kQ;
  while (exp) {
    if (exp & 1) r = r * b % kQ;
    b = b * b % kQ;
    exp >>= 1;
  }
  return static_cast<std::uint16_t>(r);
}

// zeta must be a primitive 256th root of unity mod q.
static_assert(pow_mod(kZeta, 128) == kQ - 1, "zeta^128 != -1 (mod q)");
static_assert(pow_mod(kZeta, 256) == 1, "zeta^256 != 1 (mod q)");

constexpr std::uint8_t bitrev7(std::uint8_t x) {
  std::uint8_t r = 0;
  for (int i = 0; i < 7; ++i) r = static_cast<std::uint8_t>(r | (((x >> i) & 1) << (6 - i)));
  return r;
}

namespace detail {
// zetas[i] = zeta^bitrev7(i): the twiddle factors in NTT traversal order.
constexpr std::array<std::uint16_t, 128> make_zetas() {
  std::array<std::uint16_t, 128> z{};
  for (int i = 0; i < 128; ++i) z[static_cast<std::size_t>(i)] = pow_mod(kZeta, bitrev7(static_cast<std::uint8_t>(i)));
  return z;
}
// gammas[i] = zeta^(2*bitrev7(i)+1): moduli X^2 - gamma_i of the 128 residue
// pairs, used by the basecase multiplication.
constexpr std::array<std::uint16_t, 128> make_gammas() {
  std::array<std::uint16_t, 128> g{};
  for (int i = 0; i < 128; ++i)
    g[static_cast<std::size_t>(i)] = pow_mod(kZeta, 2u * bitrev7(static_cast<std::uint8_t>(i)) + 1u);
  return g;
}
inline constexpr auto kZetas = make_zetas();
inline constexpr auto kGammas = make_gammas();
inline constexpr std::uint16_t kNInvHalf = pow_mod(128, kQ - 2);  // 128^-1 = 3303

constexpr std::uint16_t add_q(std::uint16_t a, std::uint16_t b) {
  std::uint32_t s = static_cast<std::uint32_t>(a) + b;
  return static_cast<std::uint16_t>(s >= kQ ? s - kQ : s);
}
constexpr std::uint16_t sub_q(std::uint16_t a, std::uint16_t b) {
  return static_cast<std::uint16_t>(a >= b ? a - b : a + kQ - b);
}
constexpr std::uint16_t mul_q(std::uint16_t a, std::uint16_t b) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(a) * b % kQ);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

enum class Domain : std::uint8_t { normal, ntt };

struct Polynomial {
  std::array<std::uint16_t, kN> c{};
  Domain domain = Domain::normal;

  bool operator==(const Polynomial&) const = default;
};

using PolyVec = std::array<Polynomial, kK>;

namespace detail {
inline void require_domain(const Polynomial& p, Domain d, const char* op) {
  if (p.domain != d)
    throw DomainMismatchError(std::string(op) + ": polynomial is in the " +
                              (p.domain == Domain::ntt ? "ntt" : "normal") + " domain");
}
}  // namespace detail

inline Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
  if (a.domain != b.domain) throw DomainMismatchError("poly_add: mixed domains");
  Polynomial r;
  r.domain = a.domain;
  for (int i = 0; i < kN; ++i)
    r.c[static_cast<std::size_t>(i)] = detail::add_q(a.c[static_cast<std::size_t>(i)], b.c[static_cast<std::size_t>(i)]);
  return r;
}

inline Polynomial poly_sub(const Polynomial& a, const Polynomial& b) {
  if (a.domain != b.domain) throw DomainMismatchError("poly_sub: mixed domains");
  Polynomial r;
  r.domain = a.domain;
  for (int i = 0; i < kN; ++i)
    r.c[static_cast<std::size_t>(i)] = detail::sub_q(a.c[static_cast<std::size_t>(i)], b.c[static_cast<std::size_t>(i)]);
  return r;
}

// 7-layer forward NTT, standard in-place butterfly network; output
// coefficients land in the bit-reversed residue layout.
inline Polynomial ntt_forward(Polynomial p) {
  detail::require_domain(p, Domain::normal, "ntt_forward");
  int k = 1;
  for (int len = 128; len >= 2; len >>= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      std::uint16_t zeta = detail::kZetas[static_cast<std::size_t>(k++)];
      for (int j = start; j < start + len; ++j) {
        std::uint16_t t = detail::mul_q(zeta, p.c[static_cast<std::size_t>(j + len)]);
        p.c[static_cast<std::size_t>(j + len)] = detail::sub_q(p.c[static_cast<std::size_t>(j)], t);
        p.c[static_cast<std::size_t>(j)] = detail::add_q(p.c[static_cast<std::size_t>(j)], t);
      }
    }
  }
  p.domain = Domain::ntt;
  return p;
}

inline Polynomial ntt_inverse(Polynomial p) {
  detail::require_domain(p, Domain::ntt, "ntt_inverse");
  int k = 127;
  for (int len = 2; len <= 128; len <<= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      std::uint16_t zeta = detail::kZetas[static_cast<std::size_t>(k--)];
      for (int j = start; j < start + len; ++j) {
        std::uint16_t t = p.c[static_cast<std::size_t>(j)];
        p.c[static_cast<std::size_t>(j)] = detail::add_q(t, p.c[static_cast<std::size_t>(j + len)]);
        p.c[static_cast<std::size_t>(j + len)] =
            detail::mul_q(zeta, detail::sub_q(p.c[static_cast<std::size_t>(j + len)], t));
      }
    }
  }
  for (auto& x : p.c) x = detail::mul_q(x, detail::kNInvHalf);
  p.domain = Domain::normal;
  return p;
}

// Basecase product: per residue pair i, multiply modulo X^2 - gamma_i.
inline Polynomial pointwise_mul(const Polynomial& a, const Polynomial& b) {
  detail::require_domain(a, Domain::ntt, "pointwise_mul");
  detail::require_domain(b, Domain::ntt, "pointwise_mul");
  Polynomial r;
  r.domain = Domain::ntt;
  for (int i = 0; i < 128; ++i) {
    std::uint16_t a0 = a.c[static_cast<std::size_t>(2 * i)], a1 = a.c[static_cast<std::size_t>(2 * i + 1)];
    std::uint16_t b0 = b.c[static_cast<std::size_t>(2 * i)], b1 = b.c[static_cast<std::size_t>(2 * i + 1)];
    std::uint16_t g = detail::kGammas[static_cast<std::size_t>(i)];
    r.c[static_cast<std::size_t>(2 * i)] =
        detail::add_q(detail::mul_q(a0, b0), detail::mul_q(detail::mul_q(a1, b1), g));
    r.c[static_cast<std::size_t>(2 * i + 1)] =
        detail::add_q(detail::mul_q(a0, b1), detail::mul_q(a1, b0));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

// Rejection-samples 256 coefficients < q from an XOF stream, 12 bits per
// candidate, two candidates per 3 bytes.
inline Polynomial sample_uniform(hash::XofStream& xof) {
  Polynomial p;
  p.domain = Domain::ntt;  // used only for matrix entries, which live in NTT domain
  int filled = 0;
  std::uint8_t buf[3];
  while (filled < kN) {
    xof.read(buf, 3);
    std::uint32_t d1 = buf[0] + 256u * (buf[1] & 0x0F);
    std::uint32_t d2 = (buf[1] >> 4) + 16u * buf[2];
    if (d1 < kQ) p.c[static_cast<std::size_t>(filled++)] = static_cast<std::uint16_t>(d1);
    if (filled < kN && d2 < kQ) p.c[static_cast<std::size_t>(filled++)] = static_cast<std::uint16_t>(d2);
  }
  return p;
}

// Centered binomial sampler: coefficient i is (sum of eta bits) - (sum of
// eta bits) mod q, bits taken LSB-first from a 64*eta-byte buffer.
inline Polynomial sample_cbd(int eta, BytesView buf) {
  if (buf.size() != static_cast<std::size_t>(64 * eta))
    throw WrongLengthError("sample_cbd: prf stream must be 64*eta bytes");
  auto bit = [&](int t) -> std::uint32_t { return (buf[static_cast<std::size_t>(t >> 3)] >> (t & 7)) & 1u; };
  Polynomial p;
  p.domain = Domain::normal;
  for (int i = 0; i < kN; ++i) {
    std::uint32_t x = 0, y = 0;
    for (int j = 0; j < eta; ++j) {
      x += bit(2 * i * eta + j);
      y += bit(2 * i * eta + eta + j);
    }
    p.c[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>((x + kQ - y) % kQ);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Compression and bit packing
// ---------------------------------------------------------------------------

// compress(x,d) = round((2^d / q) * x) mod 2^d, round-half-up.
// floor((x*2^d + 1664) / q) computes exactly that for 0 <= x < q.
constexpr std::uint16_t compress(std::uint16_t x, int d) {
  std::uint32_t v = ((static_cast<std::uint32_t>(x) << d) + (kQ - 1) / 2) / kQ;
  return static_cast<std::uint16_t>(v & ((1u << d) - 1));
}

// decompress(y,d) = round((q / 2^d) * y), round-half-up.
constexpr std::uint16_t decompress(std::uint16_t y, int d) {
  return static_cast<std::uint16_t>((kQ * static_cast<std::uint32_t>(y) + (1u << (d - 1))) >> d);
}

// Packs 256 d-bit values LSB-first into 32*d bytes.
inline Bytes encode_bits(const std::array<std::uint16_t, kN>& vals, int d) {
  Bytes out(static_cast<std::size_t>(32 * d), 0);
  for (int i = 0; i < kN; ++i) {
    for (int b = 0; b < d; ++b) {
      int t = i * d + b;
      out[static_cast<std::size_t>(t >> 3)] |=
          static_cast<std::uint8_t>(((vals[static_cast<std::size_t>(i)] >> b) & 1u) << (t & 7));
    }
  }
  return out;
}

// Inverse of encode_bits. For d=12 the result is reduced mod q so that
// arbitrary (possibly hostile) key bytes still yield valid coefficients.
inline std::array<std::uint16_t, kN> decode_bits(BytesView bytes, int d) {
  if (bytes.size() != static_cast<std::size_t>(32 * d))
    throw WrongLengthError("decode_bits: need 32*d bytes");
  std::array<std::uint16_t, kN> vals{};
  for (int i = 0; i < kN; ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < d; ++b) {
      int t = i * d + b;
      v |= static_cast<std::uint32_t>((bytes[static_cast<std::size_t>(t >> 3)] >> (t & 7)) & 1u) << b;
    }
    if (d == 12) v %= kQ;
    vals[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(v);
  }
  return vals;
}

namespace detail {

inline Bytes encode_poly(const Polynomial& p, int d) {
  if (d == 12) return encode_bits(p.c, 12);
  std::array<std::uint16_t, kN> vals{};
  for (int i = 0; i < kN; ++i) vals[static_cast<std::size_t>(i)] = compress(p.c[static_cast<std::size_t>(i)], d);
  return encode_bits(vals, d);
}

inline Polynomial decode_poly(BytesView bytes, int d, Domain dom) {
  auto vals = decode_bits(bytes, d);
  Polynomial p;
  p.domain = dom;
  if (d == 12) {
    p.c = vals;
  } else {
    for (int i = 0; i < kN; ++i)
      p.c[static_cast<std::size_t>(i)] = decompress(vals[static_cast<std::size_t>(i)], d);
  }
  return p;
}

inline Polynomial prf_cbd(int eta, BytesView sigma, std::uint8_t n) {
  Bytes stream = hash::shake256(concat(sigma, Bytes{n}), static_cast<std::size_t>(64 * eta));
  return sample_cbd(eta, stream);
}

inline Polynomial matrix_entry(BytesView rho, std::uint8_t first, std::uint8_t second) {
  hash::XofStream xof(hash::XofStream::Kind::shake128, concat(rho, Bytes{first, second}));
  return sample_uniform(xof);
}

// (M v)[i] = sum_j M[i][j] o v[j], all operands in NTT domain. `transposed`
// selects whether entry (i,j) is expanded as A[i][j] or A[j][i].
inline PolyVec matvec_mul(BytesView rho, const PolyVec& v, bool transposed) {
  PolyVec out;
  for (int i = 0; i < kK; ++i) {
    Polynomial acc;
    acc.domain = Domain::ntt;
    for (int j = 0; j < kK; ++j) {
      // A[i][j] expands XOF(rho || column || row).
      Polynomial a = transposed
                         ? matrix_entry(rho, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j))
                         : matrix_entry(rho, static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(i));
      acc = poly_add(acc, pointwise_mul(a, v[static_cast<std::size_t>(j)]));
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

inline Polynomial dot(const PolyVec& a, const PolyVec& b) {
  Polynomial acc;
  acc.domain = Domain::ntt;
  for (int j = 0; j < kK; ++j)
    acc = poly_add(acc, pointwise_mul(a[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(j)]));
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CPA-secure PKE
// ---------------------------------------------------------------------------

struct PkeKeyPair {
  Bytes ek;  // encode12(t_hat) || rho, 800 bytes
  Bytes dk;  // encode12(s_hat), 768 bytes
};

inline PkeKeyPair pke_keygen(BytesView d_seed) {
  if (d_seed.size() != 32) throw WrongLengthError("pke_keygen: seed must be 32 bytes");
  auto g = hash::sha3_512(concat(d_seed, Bytes{static_cast<std::uint8_t>(kK)}));
  BytesView rho(g.data(), 32), sigma(g.data() + 32, 32);

  PolyVec s_hat, e_hat;
  std::uint8_t n = 0;
  for (int i = 0; i < kK; ++i) s_hat[static_cast<std::size_t>(i)] = ntt_forward(detail::prf_cbd(kEta1, sigma, n++));
  for (int i = 0; i < kK; ++i) e_hat[static_cast<std::size_t>(i)] = ntt_forward(detail::prf_cbd(kEta1, sigma, n++));

  PolyVec t_hat = detail::matvec_mul(rho, s_hat, /*transposed=*/false);
  for (int i = 0; i < kK; ++i)
    t_hat[static_cast<std::size_t>(i)] = poly_add(t_hat[static_cast<std::size_t>(i)], e_hat[static_cast<std::size_t>(i)]);

  PkeKeyPair kp;
  for (int i = 0; i < kK; ++i)
    kp.ek = concat(kp.ek, detail::encode_poly(t_hat[static_cast<std::size_t>(i)], 12));
  kp.ek = concat(kp.ek, rho);
  for (int i = 0; i < kK; ++i)
    kp.dk = concat(kp.dk, detail::encode_poly(s_hat[static_cast<std::size_t>(i)], 12));
  return kp;
}

inline Bytes pke_encrypt(BytesView ek, BytesView m, BytesView coins) {
  if (ek.size() != kPkeEkLen) throw WrongLengthError("pke_encrypt: ek must be 800 bytes");
  if (m.size() != kMsgLen) throw WrongLengthError("pke_encrypt: message must be 32 bytes");
  if (coins.size() != 32) throw WrongLengthError("pke_encrypt: coins must be 32 bytes");

  PolyVec t_hat;
  for (int i = 0; i < kK; ++i)
    t_hat[static_cast<std::size_t>(i)] = detail::decode_poly(ek.subspan(static_cast<std::size_t>(i) * 384, 384), 12, Domain::ntt);
  BytesView rho = ek.subspan(kPkeEkLen - 32, 32);

  PolyVec y_hat;
  std::uint8_t n = 0;
  for (int i = 0; i < kK; ++i) y_hat[static_cast<std::size_t>(i)] = ntt_forward(detail::prf_cbd(kEta1, coins, n++));
  PolyVec e1;
  for (int i = 0; i < kK; ++i) e1[static_cast<std::size_t>(i)] = detail::prf_cbd(kEta2, coins, n++);
  Polynomial e2 = detail::prf_cbd(kEta2, coins, n);

  PolyVec u = detail::matvec_mul(rho, y_hat, /*transposed=*/true);
  for (int i = 0; i < kK; ++i)
    u[static_cast<std::size_t>(i)] = poly_add(ntt_inverse(u[static_cast<std::size_t>(i)]), e1[static_cast<std::size_t>(i)]);

  Polynomial mu = detail::decode_poly(m, 1, Domain::normal);
  Polynomial v = poly_add(poly_add(ntt_inverse(detail::dot(t_hat, y_hat)), e2), mu);

  Bytes ct;
  for (int i = 0; i < kK; ++i) ct = concat(ct, detail::encode_poly(u[static_cast<std::size_t>(i)], kDu));
  return concat(ct, detail::encode_poly(v, kDv));
}

inline Bytes pke_decrypt(BytesView dk, BytesView ct) {
  if (dk.size() != kPkeDkLen) throw WrongLengthError("pke_decrypt: dk must be 768 bytes");
  if (ct.size() != kCtLen) throw WrongLengthError("pke_decrypt: ct must be 768 bytes");

  PolyVec u;
  for (int i = 0; i < kK; ++i)
    u[static_cast<std::size_t>(i)] = detail::decode_poly(ct.subspan(static_cast<std::size_t>(i) * (32 * kDu), 32 * kDu), kDu, Domain::normal);
  Polynomial v = detail::decode_poly(ct.subspan(static_cast<std::size_t>(kK) * (32 * kDu), 32 * kDv), kDv, Domain::normal);

  PolyVec s_hat;
  for (int i = 0; i < kK; ++i)
    s_hat[static_cast<std::size_t>(i)] = detail::decode_poly(dk.subspan(static_cast<std::size_t>(i) * 384, 384), 12, Domain::ntt);

  PolyVec u_hat;
  for (int i = 0; i < kK; ++i) u_hat[static_cast<std::size_t>(i)] = ntt_forward(u[static_cast<std::size_t>(i)]);
  Polynomial w = poly_sub(v, ntt_inverse(detail::dot(s_hat, u_hat)));

  std::array<std::uint16_t, kN> bits{};
  for (int i = 0; i < kN; ++i) bits[static_cast<std::size_t>(i)] = compress(w.c[static_cast<std::size_t>(i)], 1);
  return encode_bits(bits, 1);
}

// ---------------------------------------------------------------------------
// FO-transformed KEM (implicit rejection)
// ---------------------------------------------------------------------------

struct Kem512KeyPair {
  Bytes ek;  // 800 bytes
  Bytes dk;  // dk_pke || ek || H(ek) || z, 1632 bytes
};

inline Kem512KeyPair kem512_keygen(BytesView seed) {
  if (seed.size() != 32) throw WrongLengthError("kem512_keygen: seed must be 32 bytes");
  auto dz = hash::sha3_512(seed);  // d || z
  BytesView d(dz.data(), 32), z(dz.data() + 32, 32);
  PkeKeyPair pke = pke_keygen(d);
  Kem512KeyPair kp;
  kp.ek = pke.ek;
  kp.dk = concat(pke.dk, pke.ek, hash::sha3_256(pke.ek), z);
  return kp;
}

inline std::pair<Bytes, Bytes> kem512_encap(BytesView ek, BytesView m) {
  if (ek.size() != kPkeEkLen) throw WrongLengthError("kem512_encap: ek must be 800 bytes");
  if (m.size() != kMsgLen) throw WrongLengthError("kem512_encap: m must be 32 bytes");
  auto kr = hash::sha3_512(concat(m, hash::sha3_256(ek)));  // K || r
  Bytes ct = pke_encrypt(ek, m, BytesView(kr.data() + 32, 32));
  return {std::move(ct), Bytes(kr.begin(), kr.begin() + 32)};
}

inline Bytes kem512_decap(BytesView dk, BytesView ct) {
  if (dk.size() != kKemDkLen) throw WrongLengthError("kem512_decap: dk must be 1632 bytes");
  if (ct.size() != kCtLen) throw WrongLengthError("kem512_decap: ct must be 768 bytes");
  BytesView dk_pke = dk.first(kPkeDkLen);
  BytesView ek = dk.subspan(kPkeDkLen, kPkeEkLen);
  BytesView h = dk.subspan(kPkeDkLen + kPkeEkLen, 32);
  BytesView z = dk.subspan(kPkeDkLen + kPkeEkLen + 32, 32);

  Bytes m = pke_decrypt(dk_pke, ct);
  auto kr = hash::sha3_512(concat(m, h));
  Bytes ct2 = pke_encrypt(ek, m, BytesView(kr.data() + 32, 32));
  if (!std::equal(ct2.begin(), ct2.end(), ct.begin(), ct.end()))
    return hash::shake256(concat(z, ct), 32);  // implicit rejection
  return Bytes(kr.begin(), kr.begin() + 32);
}

// ---------------------------------------------------------------------------
// Provider
// ---------------------------------------------------------------------------

class MlkemProvider final : public KemProvider {
 public:
  MlkemProvider()
      : KemProvider(make_meta(AlgKind::kem, "kem.toy_mlkem512", codes::toy_mlkem512, kPkeEkLen,
                              kKemDkLen, kCtLen, {120, 150, 190})) {}

 private:
  KemKeyPair do_keygen(BytesView seed) const override {
    Kem512KeyPair kp = kem512_keygen(seed);
    return KemKeyPair{std::move(kp.ek), std::move(kp.dk), {}};
  }

  std::pair<Bytes, Bytes> do_encap(BytesView pk, BytesView randomness) const override {
    return kem512_encap(pk, randomness);
  }

  Bytes do_decap(BytesView sk, BytesView ct) const override { return kem512_decap(sk, ct); }
};

}  // namespace pqtls::mlkem
