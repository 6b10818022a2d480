// Lattice KEM: NTT identities against an O(n²) convolution oracle,
// compression bounds, samplers, PKE/KEM roundtrips, tamper behavior,
// and pinned golden vectors.
#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

#include "pqtls/mlkem.hpp"
#include "pqtls/registry.hpp"
#include "support/oracles.hpp"

using namespace pqtls;
using namespace pqtls::mlkem;

namespace {
std::array<std::uint8_t, 32> arr32(std::uint8_t fill) {
  std::array<std::uint8_t, 32> a{};
  a.fill(fill);
  return a;
}
}  // namespace

TEST(Params, RootOfUnityCongruences) {
  EXPECT_EQ(pow_mod(kZeta, 128), kQ - 1);  // 17^128 = -1 (mod q)
  EXPECT_EQ(pow_mod(kZeta, 256), 1u);      // 17^256 = 1 (mod q)
  EXPECT_EQ(kPkeEkLen, 800u);
  EXPECT_EQ(kCtLen, 768u);
  EXPECT_EQ(kKemDkLen, 1632u);
}

TEST(Ntt, ZeroAndConstant) {
  Polynomial zero;  // default zero, normal domain
  Polynomial z2 = ntt_inverse(ntt_forward(zero));
  EXPECT_EQ(z2.c, zero.c);

  Polynomial c;
  c.c.fill(1234);
  Polynomial c2 = ntt_inverse(ntt_forward(c));
  EXPECT_EQ(c2.c, c.c);
}

TEST(Ntt, DomainMismatchErrors) {
  Polynomial p;
  Polynomial p_ntt = ntt_forward(p);
  EXPECT_THROW((void)ntt_forward(p_ntt), DomainMismatchError);
  EXPECT_THROW((void)ntt_inverse(p), DomainMismatchError);
  Polynomial q;
  EXPECT_THROW((void)pointwise_mul(p_ntt, q), DomainMismatchError);
  EXPECT_THROW((void)poly_add(p_ntt, q), DomainMismatchError);
}

TEST(Ntt, RoundtripIdentity1000) {
  auto g = testsupport::rng(11);
  for (int i = 0; i < 1000; ++i) {
    Polynomial p = testsupport::random_poly(g);
    Polynomial q = ntt_inverse(ntt_forward(p));
    ASSERT_EQ(q.c, p.c) << "roundtrip failed at trial " << i;
  }
}

// NTT-domain multiplication must equal the naive negacyclic convolution,
// exactly, over 1000 random pairs.
TEST(Ntt, MultiplicationMatchesConvolutionOracle1000) {
  auto g = testsupport::rng(12);
  for (int i = 0; i < 1000; ++i) {
    Polynomial a = testsupport::random_poly(g);
    Polynomial b = testsupport::random_poly(g);
    Polynomial via_ntt = ntt_inverse(pointwise_mul(ntt_forward(a), ntt_forward(b)));
    Polynomial via_oracle = testsupport::convolution_oracle(a, b);
    ASSERT_EQ(via_ntt.c, via_oracle.c) << "mismatch at trial " << i;
  }
}

TEST(Ntt, MultiplicativeIdentityAndCommutativity) {
  auto g = testsupport::rng(13);
  Polynomial one;
  one.c[0] = 1;
  Polynomial one_hat = ntt_forward(one);
  for (int i = 0; i < 100; ++i) {
    Polynomial b = testsupport::random_poly(g);
    Polynomial b_hat = ntt_forward(b);
    Polynomial prod = ntt_inverse(pointwise_mul(one_hat, b_hat));
    EXPECT_EQ(prod.c, b.c);
    Polynomial a_hat = ntt_forward(testsupport::random_poly(g));
    EXPECT_EQ(pointwise_mul(a_hat, b_hat).c, pointwise_mul(b_hat, a_hat).c);
  }
}

TEST(Compress, PinnedExamplesAndExhaustiveBound) {
  EXPECT_EQ(compress(0, 1), 0);
  EXPECT_EQ(decompress(0, 1), 0);
  EXPECT_EQ(compress(1664, 1), 1);     // 2*1664/3329 = 0.9997 rounds to 1
  EXPECT_EQ(decompress(1, 1), 1665);   // 3329/2 rounds half-up to 1665

  for (int d : {1, 4, 10}) {
    std::uint32_t bound = (kQ + (1u << (d + 1))) / (1u << (d + 1));  // round(q/2^(d+1))
    for (std::uint32_t x = 0; x < kQ; ++x) {
      std::uint16_t y = compress(static_cast<std::uint16_t>(x), d);
      ASSERT_LT(y, 1u << d);
      std::uint32_t back = decompress(y, d);
      std::uint32_t diff = x > back ? x - back : back - x;
      std::uint32_t centered = std::min(diff, kQ - diff);
      ASSERT_LE(centered, bound) << "x=" << x << " d=" << d;
    }
  }
}

TEST(Sampler, CbdZeroStreamAndRange) {
  Bytes zeros(64 * 3, 0);
  Polynomial p = sample_cbd(3, zeros);
  for (auto c : p.c) EXPECT_EQ(c, 0);

  auto g = testsupport::rng(14);
  Bytes buf = testsupport::random_bytes(g, 64 * 2);
  Polynomial q = sample_cbd(2, buf);
  for (auto c : q.c) {
    bool small = c <= 2 || c >= kQ - 2;
    EXPECT_TRUE(small) << c;
  }
  EXPECT_THROW((void)sample_cbd(2, view(zeros)), WrongLengthError);  // 192 != 128
}

// Empirical mean of eta=2 CBD over 10^6 coefficients within 3 sigma of 0
// (variance per coefficient = eta/2 = 1).
TEST(Sampler, CbdMeanWithinThreeSigma) {
  auto g = testsupport::rng(15);
  const int kPolys = 3907;  // ~10^6 coefficients
  double sum = 0;
  for (int i = 0; i < kPolys; ++i) {
    Bytes buf = testsupport::random_bytes(g, 64 * 2);
    Polynomial p = sample_cbd(2, buf);
    for (auto c : p.c) sum += c <= 2 ? static_cast<double>(c)
                                     : static_cast<double>(c) - static_cast<double>(kQ);
  }
  double n = kPolys * 256.0;
  double mean = sum / n;
  EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(n));
}

TEST(Sampler, UniformDeterministicAndInRange) {
  Bytes seed{'x', 'o', 'f'};
  hash::XofStream s1(hash::XofStream::Kind::shake128, seed);
  hash::XofStream s2(hash::XofStream::Kind::shake128, seed);
  Polynomial a = sample_uniform(s1);
  Polynomial b = sample_uniform(s2);
  EXPECT_EQ(a.c, b.c);
  EXPECT_EQ(a.domain, Domain::ntt);
  for (auto c : a.c) EXPECT_LT(c, kQ);
}

TEST(Pke, Roundtrip10k) {
  auto g = testsupport::rng(16);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes seed = testsupport::random_bytes(g, 32);
    Bytes m = testsupport::random_bytes(g, 32);
    Bytes coins = testsupport::random_bytes(g, 32);
    PkeKeyPair kp = pke_keygen(seed);
    Bytes ct = pke_encrypt(kp.ek, m, coins);
    if (pke_decrypt(kp.dk, ct) != m) ++failures;
    ASSERT_EQ(ct.size(), kCtLen);
  }
  EXPECT_EQ(failures, 0);
}

TEST(Kem, GoldenVectorsAllZeroSeed) {
  Kem512KeyPair kp = kem512_keygen(view(Bytes(32, 0)));
  auto [ct, ss] = kem512_encap(kp.ek, view(Bytes(32, 0)));
  EXPECT_EQ(to_hex(hash::sha3_256(kp.ek)), testsupport::kGoldenMlkemEkSha3);
  EXPECT_EQ(to_hex(hash::sha3_256(ct)), testsupport::kGoldenMlkemCtSha3);
  EXPECT_EQ(to_hex(ss), testsupport::kGoldenMlkemSs);
  EXPECT_EQ(kem512_decap(kp.dk, ct), ss);
}

TEST(Kem, SizesMatchRegistry) {
  Kem512KeyPair kp = kem512_keygen(view(Bytes(32, 0x5c)));
  EXPECT_EQ(kp.ek.size(), 800u);
  EXPECT_EQ(kp.dk.size(), 1632u);
  auto [ct, ss] = kem512_encap(kp.ek, view(Bytes(32, 0x3a)));
  EXPECT_EQ(ct.size(), 768u);
  EXPECT_EQ(ss.size(), 32u);
}

// Single-bit ciphertext corruptions: implicit rejection yields a deterministic
// secret that differs from the honest one; distinct corruptions yield distinct
// rejected secrets.
TEST(Kem, ImplicitRejectionStableAndDistinct) {
  auto g = testsupport::rng(17);
  Kem512KeyPair kp = kem512_keygen(testsupport::random_bytes(g, 32));
  auto [ct, ss] = kem512_encap(kp.ek, testsupport::random_bytes(g, 32));

  std::set<Bytes> rejected;
  std::set<std::pair<std::size_t, int>> used;
  for (int i = 0; i < 100; ++i) {
    std::size_t byte;
    int bit;
    do {
      byte = g() % ct.size();
      bit = static_cast<int>(g() % 8);
    } while (!used.insert({byte, bit}).second);
    Bytes bad = ct;
    bad[byte] ^= static_cast<std::uint8_t>(1u << bit);
    Bytes r1 = kem512_decap(kp.dk, bad);
    Bytes r2 = kem512_decap(kp.dk, bad);
    ASSERT_EQ(r1, r2) << "rejection not deterministic";
    ASSERT_NE(r1, ss) << "tampered ct produced the honest secret";
    rejected.insert(r1);
  }
  EXPECT_EQ(rejected.size(), 100u);  // pairwise distinct
}

TEST(Provider, RegistryIntegration) {
  const KemProvider& kem = default_registry().kem(codes::toy_mlkem512);
  KemKeyPair kp = kem.keygen(Bytes(32, 0x21));
  auto [ct, ss] = kem.encap(kp.public_key, Bytes(32, 0x22));
  EXPECT_EQ(kem.decap(kp.secret_key, ct), ss);
  EXPECT_THROW((void)kem.decap(kp.secret_key, Bytes(767, 0)), WrongLengthError);
  EXPECT_THROW((void)kem.encap(Bytes(799, 0), Bytes(32, 0)), WrongLengthError);
}

TEST(Provider, EncapRejectsShortMessageSeed) {
  auto seed = arr32(0x00);
  Kem512KeyPair kp = kem512_keygen(view(Bytes(seed.begin(), seed.end())));
  EXPECT_THROW((void)kem512_encap(kp.ek, view(Bytes(31, 0))), WrongLengthError);
}
