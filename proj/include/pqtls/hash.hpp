// Hash primitives used throughout the suite, backed by OpenSSL libcrypto:
//   H   = SHA3-256, G = SHA3-512
//   XOF = SHAKE128 (SHAKE256 where a domain-separated PRF stream is needed)
//   MAC = HMAC over SHA-256
// The choices are fixed so golden vectors stay portable across
// implementations. None of this code aims for side-channel resistance.
#pragma once

#include <openssl/core_names.h>
#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "pqtls/bytes.hpp"

namespace pqtls::hash {

namespace detail {

inline void fail(const char* what) { throw std::runtime_error(std::string("openssl: ") + what); }

struct Algorithms {
  EVP_MD* sha256 = nullptr;
  EVP_MD* sha3_256 = nullptr;
  EVP_MD* sha3_512 = nullptr;
  EVP_MD* shake128 = nullptr;
  EVP_MD* shake256 = nullptr;
  EVP_MAC* hmac = nullptr;

  Algorithms() {
    sha256 = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    sha3_256 = EVP_MD_fetch(nullptr, "SHA3-256", nullptr);
    sha3_512 = EVP_MD_fetch(nullptr, "SHA3-512", nullptr);
    shake128 = EVP_MD_fetch(nullptr, "SHAKE128", nullptr);
    shake256 = EVP_MD_fetch(nullptr, "SHAKE256", nullptr);
    hmac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (!sha256 || !sha3_256 || !sha3_512 || !shake128 || !shake256 || !hmac)
      fail("algorithm fetch failed");
  }
  ~Algorithms() {
    EVP_MD_free(sha256);
    EVP_MD_free(sha3_256);
    EVP_MD_free(sha3_512);
    EVP_MD_free(shake128);
    EVP_MD_free(shake256);
    EVP_MAC_free(hmac);
  }
};

inline const Algorithms& algs() {
  static Algorithms a;
  return a;
}

// One reusable digest context per thread; EVP contexts are cheap to re-init
// but not to allocate in hot loops.
struct ThreadCtx {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  ~ThreadCtx() { EVP_MD_CTX_free(ctx); }
};

inline EVP_MD_CTX* tls_ctx() {
  thread_local ThreadCtx tc;
  return tc.ctx;
}

inline void digest_into(const EVP_MD* md, BytesView in, std::uint8_t* out, std::size_t outlen) {
  EVP_MD_CTX* ctx = tls_ctx();
  if (EVP_DigestInit_ex2(ctx, md, nullptr) != 1) fail("DigestInit");
  if (!in.empty() && EVP_DigestUpdate(ctx, in.data(), in.size()) != 1) fail("DigestUpdate");
  unsigned int n = 0;
  if (EVP_DigestFinal_ex(ctx, out, &n) != 1) fail("DigestFinal");
  if (n != outlen) fail("unexpected digest length");
}

inline void xof_into(const EVP_MD* md, BytesView in, std::uint8_t* out, std::size_t outlen) {
  EVP_MD_CTX* ctx = tls_ctx();
  if (EVP_DigestInit_ex2(ctx, md, nullptr) != 1) fail("DigestInit");
  if (!in.empty() && EVP_DigestUpdate(ctx, in.data(), in.size()) != 1) fail("DigestUpdate");
  if (EVP_DigestFinalXOF(ctx, out, outlen) != 1) fail("DigestFinalXOF");
}

}  // namespace detail

inline std::array<std::uint8_t, 32> sha256(BytesView in) {
  std::array<std::uint8_t, 32> out;
  detail::digest_into(detail::algs().sha256, in, out.data(), 32);
  return out;
}

inline std::array<std::uint8_t, 32> sha3_256(BytesView in) {
  std::array<std::uint8_t, 32> out;
  detail::digest_into(detail::algs().sha3_256, in, out.data(), 32);
  return out;
}

inline std::array<std::uint8_t, 64> sha3_512(BytesView in) {
  std::array<std::uint8_t, 64> out;
  detail::digest_into(detail::algs().sha3_512, in, out.data(), 64);
  return out;
}

inline Bytes shake128(BytesView in, std::size_t outlen) {
  Bytes out(outlen);
  detail::xof_into(detail::algs().shake128, in, out.data(), outlen);
  return out;
}

inline Bytes shake256(BytesView in, std::size_t outlen) {
  Bytes out(outlen);
  detail::xof_into(detail::algs().shake256, in, out.data(), outlen);
  return out;
}

inline std::array<std::uint8_t, 32> hmac_sha256(BytesView key, BytesView msg) {
  EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(detail::algs().hmac);
  if (!ctx) detail::fail("MAC_CTX_new");
  char digest_name[] = "SHA256";
  OSSL_PARAM params[2] = {
      OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
      OSSL_PARAM_construct_end()};
  std::array<std::uint8_t, 32> out;
  std::size_t outl = 0;
  int ok = EVP_MAC_init(ctx, key.data(), key.size(), params) &&
           (msg.empty() || EVP_MAC_update(ctx, msg.data(), msg.size())) &&
           EVP_MAC_final(ctx, out.data(), &outl, out.size());
  EVP_MAC_CTX_free(ctx);
  if (!ok || outl != 32) detail::fail("HMAC");
  return out;
}

// Synthetic cost injection for the mock providers: exactly `units` iterated
// SHA-256 compressions over a 32-byte rolling state.
inline void burn_units(std::uint64_t units) {
  if (units == 0) return;
  const EVP_MD* md = detail::algs().sha256;
  EVP_MD_CTX* ctx = detail::tls_ctx();
  std::uint8_t state[32] = {0x5a};
  for (std::uint64_t i = 0; i < units; ++i) {
    if (EVP_DigestInit_ex2(ctx, md, nullptr) != 1) detail::fail("DigestInit");
    EVP_DigestUpdate(ctx, state, sizeof state);
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx, state, &n);
  }
}

// Incremental XOF squeezing on top of the one-shot EVP_DigestFinalXOF.
// SHAKE output is prefix-stable, so when the buffer runs out we recompute a
// longer output of the same stream and keep reading from where we stopped.
class XofStream {
 public:
  enum class Kind { shake128, shake256 };

  XofStream(Kind kind, Bytes input, std::size_t initial_hint = 512)
      : kind_(kind), input_(std::move(input)) {
    squeeze(initial_hint);
  }

  void read(std::uint8_t* out, std::size_t n) {
    if (pos_ + n > buf_.size()) {
      std::size_t want = buf_.size() * 2;
      while (want < pos_ + n) want *= 2;
      squeeze(want);
    }
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }

  std::uint8_t next() {
    std::uint8_t b;
    read(&b, 1);
    return b;
  }

  std::size_t consumed() const { return pos_; }

 private:
  void squeeze(std::size_t total) {
    buf_.resize(total);
    const EVP_MD* md = kind_ == Kind::shake128 ? detail::algs().shake128
                                               : detail::algs().shake256;
    detail::xof_into(md, view(input_), buf_.data(), buf_.size());
  }

  Kind kind_;
  Bytes input_;
  Bytes buf_;
  std::size_t pos_ = 0;
};

}  // namespace pqtls::hash
