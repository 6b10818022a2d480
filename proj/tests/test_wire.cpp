// Wire codec: field-size arithmetic, randomized roundtrips, boundary
// truncation, validation rejections, and fuzz totality.
#include <gtest/gtest.h>

#include <algorithm>
#include <variant>

#include "pqtls/wire.hpp"
#include "support/oracles.hpp"

using namespace pqtls;
using namespace pqtls::wire;

namespace {

ClientHello random_client_hello(std::mt19937_64& g) {
  ClientHello ch;
  for (auto& b : ch.client_random) b = static_cast<std::uint8_t>(g());
  ch.kem_alg = static_cast<std::uint16_t>(g());
  std::size_t n_sigs = 1 + g() % kMaxSigAlgs;
  for (std::size_t i = 0; i < n_sigs; ++i) {
    std::uint16_t c;
    do {
      c = static_cast<std::uint16_t>(g());
    } while (std::find(ch.sig_algs.begin(), ch.sig_algs.end(), c) != ch.sig_algs.end());
    ch.sig_algs.push_back(c);
  }
  ch.kem_public_key = testsupport::random_bytes(g, g() % 1200);
  return ch;
}

ServerHello random_server_hello(std::mt19937_64& g) {
  ServerHello sh;
  for (auto& b : sh.server_random) b = static_cast<std::uint8_t>(g());
  sh.chosen_kem = static_cast<std::uint16_t>(g());
  sh.chosen_sig = static_cast<std::uint16_t>(g());
  sh.certificate.subject = "subject-" + std::to_string(g() % 1000);
  sh.certificate.sig_alg = static_cast<std::uint16_t>(g());
  sh.certificate.subject_pk = testsupport::random_bytes(g, g() % 1400);
  sh.certificate.issuer_sig = testsupport::random_bytes(g, g() % 2500);
  sh.kem_ciphertext = testsupport::random_bytes(g, g() % 1100);
  sh.signature = testsupport::random_bytes(g, g() % 2500);
  return sh;
}

Finished random_finished(std::mt19937_64& g) {
  Finished f;
  for (auto& b : f.mac) b = static_cast<std::uint8_t>(g());
  return f;
}

Alert random_alert(std::mt19937_64& g) {
  Alert a;
  a.code = static_cast<AlertCode>(1 + g() % 5);
  a.detail = std::string(g() % 40, 'd');
  return a;
}

Message random_message(std::mt19937_64& g) {
  switch (g() % 4) {
    case 0: return random_client_hello(g);
    case 1: return random_server_hello(g);
    case 2: return random_finished(g);
    default: return random_alert(g);
  }
}

}  // namespace

// Minimal ClientHello: 32-byte pk KEM, one sig_alg ->
// payload = 2 + 32 + 2 + 1 + 2 + 4 + 32 = 75 bytes; frame adds 5.
TEST(Wire, MinimalClientHelloPayloadIs75Bytes) {
  ClientHello ch;
  ch.kem_alg = 0x0110;
  ch.sig_algs = {0x0203};
  ch.kem_public_key = Bytes(32, 0xAA);
  EXPECT_EQ(encode_payload(ch).size(), 75u);
  Bytes framed = encode_message(ch);
  EXPECT_EQ(framed.size(), 80u);
  EXPECT_EQ(framed[0], static_cast<std::uint8_t>(MsgType::client_hello));
}

TEST(Wire, RoundtripRandomized10k) {
  auto g = testsupport::rng(41);
  for (int i = 0; i < 10000; ++i) {
    Message m = random_message(g);
    Message back = decode_message(encode_message(m));
    ASSERT_EQ(back.index(), m.index()) << "type changed at trial " << i;
    ASSERT_TRUE(back == m) << "roundtrip mismatch at trial " << i;
  }
}

TEST(Wire, TruncationByOneByteAlwaysRejected) {
  auto g = testsupport::rng(42);
  Message msgs[] = {random_client_hello(g), random_server_hello(g), random_finished(g),
                    random_alert(g)};
  for (const Message& m : msgs) {
    Bytes full = encode_message(m);
    Bytes cut(full.begin(), full.end() - 1);
    EXPECT_THROW((void)decode_message(cut), DecodeError);
    // and truncation at every header boundary
    for (std::size_t keep : {std::size_t{0}, std::size_t{1}, std::size_t{4}}) {
      Bytes prefix(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(keep));
      EXPECT_THROW((void)decode_message(prefix), DecodeError);
    }
  }
}

TEST(Wire, TrailingByteRejected) {
  ClientHello ch;
  ch.sig_algs = {1};
  ch.kem_public_key = Bytes(8, 0);
  Bytes framed = encode_message(ch);
  framed.push_back(0x00);
  EXPECT_THROW((void)decode_message(framed), DecodeError);
}

TEST(Wire, UnknownTypeAndBadVersionRejected) {
  ClientHello ch;
  ch.sig_algs = {1};
  Bytes framed = encode_message(ch);
  Bytes bad_type = framed;
  bad_type[0] = 0x09;
  EXPECT_THROW((void)decode_message(bad_type), DecodeError);

  Bytes bad_version = framed;
  bad_version[kFrameHeaderLen] = 0xFF;  // version hi byte inside payload
  EXPECT_THROW((void)decode_message(bad_version), DecodeError);
}

TEST(Wire, ValidationRejections) {
  ClientHello no_sigs;
  no_sigs.kem_public_key = Bytes(4, 0);
  EXPECT_THROW((void)encode_payload(no_sigs), ConfigError);

  ClientHello dup;
  dup.sig_algs = {7, 7};
  EXPECT_THROW((void)encode_payload(dup), ConfigError);

  ClientHello many;
  for (std::uint16_t i = 0; i < 9; ++i) many.sig_algs.push_back(i);
  EXPECT_THROW((void)encode_payload(many), ConfigError);

  Certificate long_subject;
  long_subject.subject = std::string(256, 's');
  EXPECT_THROW((void)encode_payload(long_subject), ConfigError);

  Alert long_detail;
  long_detail.code = AlertCode::decode_error;
  long_detail.detail = std::string(256, 'd');
  EXPECT_THROW((void)encode_payload(long_detail), ConfigError);
}

TEST(Wire, AlertCodeRange) {
  for (std::uint16_t c = 1; c <= 5; ++c) {
    Alert a{static_cast<AlertCode>(c), "x"};
    Message m = decode_message(encode_message(a));
    EXPECT_EQ(std::get<Alert>(m).code, static_cast<AlertCode>(c));
  }
  // code 0 and 6 rejected at decode (craft frames by hand)
  for (std::uint16_t c : {std::uint16_t{0}, std::uint16_t{6}}) {
    Bytes payload;
    append_u16(payload, c);
    append_u8(payload, 0);
    Bytes framed = frame(MsgType::alert, payload);
    EXPECT_THROW((void)decode_message(framed), DecodeError);
  }
}

TEST(Wire, OversizeDeclaredLengthRejected) {
  Bytes header;
  append_u8(header, static_cast<std::uint8_t>(MsgType::finished));
  append_u32(header, 2u << 20);  // 2 MiB declared, over the cap
  EXPECT_THROW((void)decode_message(header), DecodeError);
}

// Totality: arbitrary bytes either decode to a valid message or throw
// DecodeError — nothing else, never a crash.
TEST(Wire, FuzzTotality10k) {
  auto g = testsupport::rng(43);
  int decoded = 0, rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes junk = testsupport::random_bytes(g, g() % 4096);
    if (g() % 2 == 0 && junk.size() >= kFrameHeaderLen) {
      junk[0] = static_cast<std::uint8_t>(1 + g() % 4);  // plausible type
      std::uint32_t len = static_cast<std::uint32_t>(junk.size() - kFrameHeaderLen);
      junk[1] = static_cast<std::uint8_t>(len >> 24);
      junk[2] = static_cast<std::uint8_t>(len >> 16);
      junk[3] = static_cast<std::uint8_t>(len >> 8);
      junk[4] = static_cast<std::uint8_t>(len);
    }
    try {
      (void)decode_message(junk);
      ++decoded;
    } catch (const DecodeError&) {
      ++rejected;
    }
  }
  EXPECT_EQ(decoded + rejected, 10000);
}
