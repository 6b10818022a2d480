// Handshake message types and their bit-exact wire codec.
//
// Frame layout (all integers big-endian):
//   frame        = type:u8 (1=CH, 2=SH, 3=Finished, 4=Alert) || length:u32 || payload
//   ClientHello  = version:u16 || client_random:32 || kem_alg:u16
//                  || sig_alg_count:u8 || sig_algs:u16 x count || pk_len:u32 || pk
//   ServerHello  = version:u16 || server_random:32 || chosen_kem:u16 || chosen_sig:u16
//                  || cert_len:u32 || cert || ct_len:u32 || ct || sig_len:u32 || sig
//   Certificate  = subject_len:u16 || subject || sig_alg:u16
//                  || pk_len:u32 || pk || sig_len:u32 || issuer_sig
//   Finished     = mac:32
//   Alert        = code:u16 || detail_len:u8 || detail
//
// decode_message is total: any input bytes either parse to a valid message
// or raise DecodeError; it never reads out of bounds and rejects trailing
// garbage, truncation, and unknown type tags.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/errors.hpp"

namespace pqtls::wire {

inline constexpr std::uint16_t kVersion = 0x0001;
inline constexpr std::size_t kMaxFrameLen = 1u << 20;  // 1 MiB payload cap
inline constexpr std::size_t kFrameHeaderLen = 5;      // type u8 + length u32
inline constexpr std::size_t kMaxSigAlgs = 8;
inline constexpr std::size_t kMaxSubjectLen = 255;

enum class MsgType : std::uint8_t {
  client_hello = 1,
  server_hello = 2,
  finished = 3,
  alert = 4,
};

enum class AlertCode : std::uint16_t {
  decode_error = 1,
  bad_signature = 2,
  bad_certificate = 3,
  unsupported_algorithm = 4,
  bad_finished = 5,
};

inline const char* to_string(AlertCode c) {
  switch (c) {
    case AlertCode::decode_error: return "decode_error";
    case AlertCode::bad_signature: return "bad_signature";
    case AlertCode::bad_certificate: return "bad_certificate";
    case AlertCode::unsupported_algorithm: return "unsupported_algorithm";
    case AlertCode::bad_finished: return "bad_finished";
  }
  return "unknown";
}

struct ClientHello {
  std::uint16_t version = kVersion;
  std::array<std::uint8_t, 32> client_random{};
  std::uint16_t kem_alg = 0;
  std::vector<std::uint16_t> sig_algs;
  Bytes kem_public_key;

  bool operator==(const ClientHello&) const = default;
};

struct Certificate {
  std::string subject;
  std::uint16_t sig_alg = 0;
  Bytes subject_pk;
  Bytes issuer_sig;

  bool operator==(const Certificate&) const = default;
};

struct ServerHello {
  std::uint16_t version = kVersion;
  std::array<std::uint8_t, 32> server_random{};
  std::uint16_t chosen_kem = 0;
  std::uint16_t chosen_sig = 0;
  Certificate certificate;
  Bytes kem_ciphertext;
  Bytes signature;

  bool operator==(const ServerHello&) const = default;
};

struct Finished {
  std::array<std::uint8_t, 32> mac{};

  bool operator==(const Finished&) const = default;
};

struct Alert {
  AlertCode code = AlertCode::decode_error;
  std::string detail;

  bool operator==(const Alert&) const = default;
};

using Message = std::variant<ClientHello, ServerHello, Finished, Alert>;

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace detail {
inline void check(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("cannot encode message: ") + what);
}
}  // namespace detail

inline Bytes encode_payload(const Certificate& c) {
  detail::check(c.subject.size() <= kMaxSubjectLen, "certificate subject longer than 255 bytes");
  Bytes out;
  append_u16(out, static_cast<std::uint16_t>(c.subject.size()));
  append(out, view(c.subject));
  append_u16(out, c.sig_alg);
  append_u32(out, static_cast<std::uint32_t>(c.subject_pk.size()));
  append(out, c.subject_pk);
  append_u32(out, static_cast<std::uint32_t>(c.issuer_sig.size()));
  append(out, c.issuer_sig);
  return out;
}

inline Bytes encode_payload(const ClientHello& ch) {
  detail::check(!ch.sig_algs.empty(), "sig_algs is empty");
  detail::check(ch.sig_algs.size() <= kMaxSigAlgs, "more than 8 sig_algs");
  for (std::size_t i = 0; i < ch.sig_algs.size(); ++i)
    for (std::size_t j = i + 1; j < ch.sig_algs.size(); ++j)
      detail::check(ch.sig_algs[i] != ch.sig_algs[j], "duplicate sig_alg");
  Bytes out;
  append_u16(out, ch.version);
  append(out, ch.client_random);
  append_u16(out, ch.kem_alg);
  append_u8(out, static_cast<std::uint8_t>(ch.sig_algs.size()));
  for (std::uint16_t s : ch.sig_algs) append_u16(out, s);
  append_u32(out, static_cast<std::uint32_t>(ch.kem_public_key.size()));
  append(out, ch.kem_public_key);
  return out;
}

// ServerHello payload up to and including the ciphertext — the part the
// transcript signature covers (TH1 input). The signature field follows.
inline Bytes encode_server_hello_prefix(const ServerHello& sh) {
  Bytes out;
  append_u16(out, sh.version);
  append(out, sh.server_random);
  append_u16(out, sh.chosen_kem);
  append_u16(out, sh.chosen_sig);
  Bytes cert = encode_payload(sh.certificate);
  append_u32(out, static_cast<std::uint32_t>(cert.size()));
  append(out, cert);
  append_u32(out, static_cast<std::uint32_t>(sh.kem_ciphertext.size()));
  append(out, sh.kem_ciphertext);
  return out;
}

inline Bytes encode_payload(const ServerHello& sh) {
  Bytes out = encode_server_hello_prefix(sh);
  append_u32(out, static_cast<std::uint32_t>(sh.signature.size()));
  append(out, sh.signature);
  return out;
}

inline Bytes encode_payload(const Finished& f) { return Bytes(f.mac.begin(), f.mac.end()); }

inline Bytes encode_payload(const Alert& a) {
  detail::check(a.detail.size() <= 255, "alert detail longer than 255 bytes");
  Bytes out;
  append_u16(out, static_cast<std::uint16_t>(a.code));
  append_u8(out, static_cast<std::uint8_t>(a.detail.size()));
  append(out, view(a.detail));
  return out;
}

inline MsgType type_of(const Message& m) {
  switch (m.index()) {
    case 0: return MsgType::client_hello;
    case 1: return MsgType::server_hello;
    case 2: return MsgType::finished;
    default: return MsgType::alert;
  }
}

inline Bytes frame(MsgType type, BytesView payload) {
  detail::check(payload.size() <= kMaxFrameLen, "payload longer than 1 MiB");
  Bytes out;
  out.reserve(kFrameHeaderLen + payload.size());
  append_u8(out, static_cast<std::uint8_t>(type));
  append_u32(out, static_cast<std::uint32_t>(payload.size()));
  append(out, payload);
  return out;
}

inline Bytes encode_message(const Message& m) {
  Bytes payload = std::visit([](const auto& v) { return encode_payload(v); }, m);
  return frame(type_of(m), payload);
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

namespace detail {

class Reader {
 public:
  explicit Reader(BytesView data) : d_(data) {}

  std::uint8_t u8() {
    need(1);
    return d_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = read_u16(d_.data() + pos_);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = read_u32(d_.data() + pos_);
    pos_ += 4;
    return v;
  }
  BytesView take(std::size_t n) {
    need(n);
    BytesView v = d_.subspan(pos_, n);
    pos_ += n;
    return v;
  }
  std::size_t remaining() const { return d_.size() - pos_; }
  void expect_done(const char* what) {
    if (pos_ != d_.size())
      throw DecodeError(std::string(what) + ": " + std::to_string(d_.size() - pos_) +
                        " trailing bytes");
  }

 private:
  void need(std::size_t n) {
    if (d_.size() - pos_ < n) throw DecodeError("truncated message");
  }

  BytesView d_;
  std::size_t pos_ = 0;
};

inline std::uint16_t decode_version(Reader& r) {
  std::uint16_t v = r.u16();
  if (v != kVersion) throw DecodeError("unsupported protocol version " + std::to_string(v));
  return v;
}

template <std::size_t N>
std::array<std::uint8_t, N> take_array(Reader& r) {
  BytesView v = r.take(N);
  std::array<std::uint8_t, N> out;
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace detail

inline Certificate decode_certificate(BytesView payload) {
  detail::Reader r(payload);
  Certificate c;
  std::uint16_t subject_len = r.u16();
  if (subject_len > kMaxSubjectLen) throw DecodeError("certificate subject longer than 255 bytes");
  BytesView subj = r.take(subject_len);
  c.subject.assign(subj.begin(), subj.end());
  c.sig_alg = r.u16();
  BytesView pk = r.take(r.u32());
  c.subject_pk.assign(pk.begin(), pk.end());
  BytesView sig = r.take(r.u32());
  c.issuer_sig.assign(sig.begin(), sig.end());
  r.expect_done("certificate");
  return c;
}

inline ClientHello decode_client_hello(BytesView payload) {
  detail::Reader r(payload);
  ClientHello ch;
  ch.version = detail::decode_version(r);
  ch.client_random = detail::take_array<32>(r);
  ch.kem_alg = r.u16();
  std::uint8_t count = r.u8();
  if (count == 0) throw DecodeError("empty sig_algs list");
  if (count > kMaxSigAlgs) throw DecodeError("more than 8 sig_algs");
  ch.sig_algs.resize(count);
  for (auto& s : ch.sig_algs) s = r.u16();
  for (std::size_t i = 0; i < ch.sig_algs.size(); ++i)
    for (std::size_t j = i + 1; j < ch.sig_algs.size(); ++j)
      if (ch.sig_algs[i] == ch.sig_algs[j]) throw DecodeError("duplicate sig_alg");
  BytesView pk = r.take(r.u32());
  ch.kem_public_key.assign(pk.begin(), pk.end());
  r.expect_done("client_hello");
  return ch;
}

inline ServerHello decode_server_hello(BytesView payload) {
  detail::Reader r(payload);
  ServerHello sh;
  sh.version = detail::decode_version(r);
  sh.server_random = detail::take_array<32>(r);
  sh.chosen_kem = r.u16();
  sh.chosen_sig = r.u16();
  sh.certificate = decode_certificate(r.take(r.u32()));
  BytesView ct = r.take(r.u32());
  sh.kem_ciphertext.assign(ct.begin(), ct.end());
  BytesView sig = r.take(r.u32());
  sh.signature.assign(sig.begin(), sig.end());
  r.expect_done("server_hello");
  return sh;
}

inline Finished decode_finished(BytesView payload) {
  detail::Reader r(payload);
  Finished f;
  f.mac = detail::take_array<32>(r);
  r.expect_done("finished");
  return f;
}

inline Alert decode_alert(BytesView payload) {
  detail::Reader r(payload);
  std::uint16_t code = r.u16();
  if (code < 1 || code > 5) throw DecodeError("unknown alert code " + std::to_string(code));
  Alert a;
  a.code = static_cast<AlertCode>(code);
  BytesView detail_bytes = r.take(r.u8());
  a.detail.assign(detail_bytes.begin(), detail_bytes.end());
  r.expect_done("alert");
  return a;
}

// Decodes one complete frame (header + payload, nothing after it).
inline Message decode_message(BytesView data) {
  detail::Reader r(data);
  std::uint8_t type = r.u8();
  std::uint32_t len = r.u32();
  if (len > kMaxFrameLen) throw DecodeError("frame payload longer than 1 MiB");
  BytesView payload = r.take(len);
  r.expect_done("frame");
  switch (type) {
    case static_cast<std::uint8_t>(MsgType::client_hello): return decode_client_hello(payload);
    case static_cast<std::uint8_t>(MsgType::server_hello): return decode_server_hello(payload);
    case static_cast<std::uint8_t>(MsgType::finished): return decode_finished(payload);
    case static_cast<std::uint8_t>(MsgType::alert): return decode_alert(payload);
    default: throw DecodeError("unknown message type " + std::to_string(type));
  }
}

}  // namespace pqtls::wire
