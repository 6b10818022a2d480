// Provider contract, registry behavior, mock constructions, size table,
// and the cost_units timing injection.
#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <vector>

#include "pqtls/pqtls.hpp"
#include "support/oracles.hpp"

using namespace pqtls;

namespace {
const Registry& reg() { return default_registry(); }

std::vector<std::uint16_t> kem_codes() {
  std::vector<std::uint16_t> out;
  for (const SchemeMetadata* m : reg().list())
    if (m->id.kind == AlgKind::kem) out.push_back(m->id.wire_code);
  return out;
}

std::vector<std::uint16_t> sig_codes() {
  std::vector<std::uint16_t> out;
  for (const SchemeMetadata* m : reg().list())
    if (m->id.kind == AlgKind::sig) out.push_back(m->id.wire_code);
  return out;
}
}  // namespace

// Sizes must match the public parameter tables of the schemes the entries
// stand in for; these are the premise of the size-driven bench ordering.
TEST(Registry, SizeTable) {
  struct Row {
    std::uint16_t code;
    const char* name;
    AlgKind kind;
    std::size_t pk, sk, ct_or_sig;
  };
  const Row rows[] = {
      {0x0101, "kem.toy_mlkem512", AlgKind::kem, 800, 1632, 768},
      {0x0102, "kem.mock.kyber512", AlgKind::kem, 800, 32, 768},
      {0x0103, "kem.mock.kyber768", AlgKind::kem, 1184, 32, 1088},
      {0x0110, "kem.mock.ecdhe_x25519", AlgKind::kem, 32, 32, 32},
      {0x0201, "sig.toy_wots_merkle", AlgKind::sig, 32, 32, 2468},
      {0x0202, "sig.mock.dilithium2", AlgKind::sig, 1312, 32, 2420},
      {0x0203, "sig.mock.falcon512", AlgKind::sig, 897, 32, 666},
      {0x0204, "sig.mock.sphincs128s", AlgKind::sig, 32, 32, 7856},
      {0x0210, "sig.mock.rsa2048", AlgKind::sig, 270, 32, 256},
  };
  ASSERT_EQ(reg().list().size(), std::size(rows));
  for (const Row& r : rows) {
    SCOPED_TRACE(r.name);
    ASSERT_TRUE(reg().has(r.code));
    const SchemeMetadata& m = reg().meta(r.code);
    EXPECT_EQ(m.id.name, r.name);
    EXPECT_EQ(m.id.kind, r.kind);
    EXPECT_EQ(m.pk_len, r.pk);
    EXPECT_EQ(m.sk_len, r.sk);
    EXPECT_EQ(m.ct_or_sig_len, r.ct_or_sig);
    if (r.kind == AlgKind::kem) {
      EXPECT_EQ(m.ss_len, kSharedSecretLen);
    }
    EXPECT_EQ(reg().code_of(r.name), r.code);
  }
  // Size premise behind the throughput ordering: falcon < dilithium < sphincs sigs.
  EXPECT_LT(reg().meta(codes::mock_falcon512).ct_or_sig_len,
            reg().meta(codes::mock_dilithium2).ct_or_sig_len);
  EXPECT_LT(reg().meta(codes::mock_dilithium2).ct_or_sig_len,
            reg().meta(codes::mock_sphincs128s).ct_or_sig_len);
}

TEST(Registry, DumpCsv) {
  std::string csv = reg().dump_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "wire_code,name,kind,pk_len,sk_len,ct_or_sig_len,cost_keygen,cost_op,cost_verify");
  EXPECT_NE(csv.find("257,kem.toy_mlkem512,KEM,800,1632,768,120,150,190"), std::string::npos);
  EXPECT_NE(csv.find("513,sig.toy_wots_merkle,SIG,32,32,2468,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);  // header + 9 entries
}

TEST(Registry, LookupErrors) {
  EXPECT_FALSE(reg().has(0x9999));
  EXPECT_THROW((void)reg().meta(0x9999), UnknownAlgorithmError);
  EXPECT_THROW((void)reg().kem(codes::mock_falcon512), UnknownAlgorithmError);  // wrong kind
  EXPECT_THROW((void)reg().sig(codes::mock_kyber512), UnknownAlgorithmError);
  EXPECT_THROW((void)reg().code_of("kem.unknown"), UnknownAlgorithmError);
}

TEST(Registry, RejectsDuplicates) {
  Registry r;
  r.add_kem(std::make_shared<MockKem>(
      make_meta(AlgKind::kem, "kem.a", 0x0001, 32, 32, 32, {1, 1, 1})));
  EXPECT_THROW(r.add_kem(std::make_shared<MockKem>(
                   make_meta(AlgKind::kem, "kem.b", 0x0001, 32, 32, 32, {1, 1, 1}))),
               ConfigError);
  EXPECT_THROW(r.add_kem(std::make_shared<MockKem>(
                   make_meta(AlgKind::kem, "kem.a", 0x0002, 32, 32, 32, {1, 1, 1}))),
               ConfigError);
}

TEST(Kem, RoundtripEveryKemOver1000Seeds) {
  auto g = testsupport::rng(101);
  for (std::uint16_t code : kem_codes()) {
    SCOPED_TRACE(reg().meta(code).id.name);
    const KemProvider& kem = reg().kem(code);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      KemKeyPair kp = kem.keygen(testsupport::random_bytes(g, kSeedLen));
      auto [ct, ss] = kem.encap(kp.public_key, testsupport::random_bytes(g, kSeedLen));
      Bytes ss2 = kem.decap(kp.secret_key, ct);
      if (ss != ss2) ++mismatches;
      ASSERT_EQ(kp.public_key.size(), reg().meta(code).pk_len);
      ASSERT_EQ(kp.secret_key.size(), reg().meta(code).sk_len);
      ASSERT_EQ(ct.size(), reg().meta(code).ct_or_sig_len);
      ASSERT_EQ(ss.size(), kSharedSecretLen);
    }
    EXPECT_EQ(mismatches, 0);
  }
}

TEST(Kem, DeterministicFromSeed) {
  for (std::uint16_t code : kem_codes()) {
    const KemProvider& kem = reg().kem(code);
    Bytes seed = testsupport::seed32(0x07);
    KemKeyPair a = kem.keygen(seed), b = kem.keygen(seed);
    EXPECT_EQ(a.public_key, b.public_key);
    EXPECT_EQ(a.secret_key, b.secret_key);
  }
}

TEST(Kem, MockCiphertextEmbedsRandomness) {
  const KemProvider& kem = reg().kem(codes::mock_kyber768);
  KemKeyPair kp = kem.keygen(testsupport::seed32(0x00));
  Bytes r = testsupport::seed32(0xAB);
  auto [ct, ss] = kem.encap(kp.public_key, r);
  EXPECT_TRUE(std::equal(r.begin(), r.end(), ct.begin()));
}

TEST(Kem, MockGoldenVectors) {
  const KemProvider& kem = reg().kem(codes::mock_kyber768);
  KemKeyPair kp = kem.keygen(testsupport::seed32(0x00));
  Bytes r(32);
  for (int i = 0; i < 32; ++i) r[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  auto [ct, ss] = kem.encap(kp.public_key, r);
  EXPECT_EQ(testsupport::hex_of(view(kp.public_key), 0, 16), testsupport::kGoldenMockKyber768Pk0_16);
  EXPECT_EQ(testsupport::hex_of(view(ct), 32, 48), testsupport::kGoldenMockKyber768Ct32_48);
  EXPECT_EQ(to_hex(ss), testsupport::kGoldenMockKyber768Ss);
}

TEST(Kem, WrongLengths) {
  const KemProvider& kem = reg().kem(codes::mock_kyber512);
  KemKeyPair kp = kem.keygen(testsupport::seed32(0x01));
  Bytes short_pk(kp.public_key.begin(), kp.public_key.end() - 1);
  EXPECT_THROW((void)kem.encap(short_pk, testsupport::seed32(0)), WrongLengthError);
  auto [ct, ss] = kem.encap(kp.public_key, testsupport::seed32(0));
  Bytes short_ct(ct.begin(), ct.end() - 1);
  EXPECT_THROW((void)kem.decap(kp.secret_key, short_ct), WrongLengthError);
  EXPECT_THROW((void)kem.keygen(Bytes(31, 0)), WrongLengthError);
}

TEST(Sig, SignVerifyEverySig) {
  auto g = testsupport::rng(202);
  for (std::uint16_t code : sig_codes()) {
    SCOPED_TRACE(reg().meta(code).id.name);
    const SigProvider& sig = reg().sig(code);
    SigKeyPair kp = sig.keygen(testsupport::seed32(0x21));
    Bytes msg = testsupport::random_bytes(g, 100);
    Bytes s = sig.sign(kp.secret_key, msg);
    EXPECT_EQ(s.size(), reg().meta(code).ct_or_sig_len);
    EXPECT_TRUE(sig.verify(kp.public_key, msg, s));
  }
}

// 100 random single-bit flips in message or signature -> always false.
TEST(Sig, BitFlip100TrialsAlwaysFalse) {
  auto g = testsupport::rng(303);
  for (std::uint16_t code : {codes::mock_dilithium2, codes::mock_falcon512,
                             codes::mock_sphincs128s, codes::mock_rsa2048}) {
    SCOPED_TRACE(reg().meta(code).id.name);
    const SigProvider& sig = reg().sig(code);
    SigKeyPair kp = sig.keygen(testsupport::seed32(0x22));
    for (int i = 0; i < 100; ++i) {
      Bytes msg = testsupport::random_bytes(g, 64);
      Bytes s = sig.sign(kp.secret_key, msg);
      if (g() % 2 == 0) {
        msg[g() % msg.size()] ^= static_cast<std::uint8_t>(1u << (g() % 8));
      } else {
        s[g() % s.size()] ^= static_cast<std::uint8_t>(1u << (g() % 8));
      }
      EXPECT_FALSE(sig.verify(kp.public_key, msg, s));
    }
  }
}

TEST(Sig, MockDeterministicAndDistinctSeeds) {
  const SigProvider& sig = reg().sig(codes::mock_falcon512);
  SigKeyPair a = sig.keygen(testsupport::seed32(0x31));
  SigKeyPair b = sig.keygen(testsupport::seed32(0x31));
  SigKeyPair c = sig.keygen(testsupport::seed32(0x32));
  EXPECT_EQ(a.public_key, b.public_key);
  EXPECT_NE(a.public_key, c.public_key);
  Bytes msg{'m'};
  EXPECT_EQ(sig.sign(a.secret_key, msg), sig.sign(b.secret_key, msg));
}

TEST(Sig, MockGoldenVectors) {
  const SigProvider& sig = reg().sig(codes::mock_falcon512);
  SigKeyPair kp = sig.keygen(testsupport::seed32(0x00));
  Bytes msg{'h', 'e', 'l', 'l', 'o'};
  Bytes s = sig.sign(kp.secret_key, msg);
  EXPECT_EQ(testsupport::hex_of(view(kp.public_key), 32, 48), testsupport::kGoldenMockFalconPk32_48);
  EXPECT_EQ(testsupport::hex_of(view(s), 0, 16), testsupport::kGoldenMockFalconSig0_16);
}

TEST(Sig, SphincsSignatureExactly7856Bytes) {
  const SigProvider& sig = reg().sig(codes::mock_sphincs128s);
  SigKeyPair kp = sig.keygen(testsupport::seed32(0x41));
  EXPECT_EQ(sig.sign(kp.secret_key, Bytes{'x'}).size(), 7856u);
}

// cost_units=c burns c iterated compressions; medians over 20 runs must be
// strictly ordered for c in {0, 10^4, 10^6}.
TEST(Cost, MedianTimesMonotoneInCostUnits) {
  Registry r;
  r.add_kem(std::make_shared<MockKem>(
      make_meta(AlgKind::kem, "kem.c0", 0x0001, 32, 32, 32, {0, 0, 0})));
  r.add_kem(std::make_shared<MockKem>(
      make_meta(AlgKind::kem, "kem.c4", 0x0002, 32, 32, 32, {10000, 0, 0})));
  r.add_kem(std::make_shared<MockKem>(
      make_meta(AlgKind::kem, "kem.c6", 0x0003, 32, 32, 32, {1000000, 0, 0})));
  auto median_keygen_ns = [&r](std::uint16_t code) {
    std::vector<long> times;
    for (int i = 0; i < 20; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      (void)r.kem(code).keygen(testsupport::seed32(static_cast<std::uint8_t>(i)));
      auto t1 = std::chrono::steady_clock::now();
      times.push_back(
          static_cast<long>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    std::sort(times.begin(), times.end());
    return times[10];
  };
  long m0 = median_keygen_ns(0x0001);
  long m4 = median_keygen_ns(0x0002);
  long m6 = median_keygen_ns(0x0003);
  EXPECT_LT(m0, m4);
  EXPECT_LT(m4, m6);
}

TEST(Counters, OperationsBumpCounters) {
  op_counters().reset();
  const KemProvider& kem = reg().kem(codes::mock_kyber512);
  const SigProvider& sig = reg().sig(codes::mock_falcon512);
  KemKeyPair kkp = kem.keygen(testsupport::seed32(1));
  auto [ct, ss] = kem.encap(kkp.public_key, testsupport::seed32(2));
  (void)kem.decap(kkp.secret_key, ct);
  SigKeyPair skp = sig.keygen(testsupport::seed32(3));
  Bytes s = sig.sign(skp.secret_key, Bytes{'m'});
  (void)sig.verify(skp.public_key, Bytes{'m'}, s);
  EXPECT_EQ(op_counters().kem_keygen.load(), 1u);
  EXPECT_EQ(op_counters().kem_encap.load(), 1u);
  EXPECT_EQ(op_counters().kem_decap.load(), 1u);
  EXPECT_EQ(op_counters().sig_keygen.load(), 1u);
  EXPECT_EQ(op_counters().sig_sign.load(), 1u);
  EXPECT_EQ(op_counters().sig_verify.load(), 1u);
}
