// A stateful hash-based signature scheme: WOTS chains under a single Merkle
// tree (XMSS-shaped). Registered as the "real" (non-mock) signature
// provider; its cost profile is dominated by raw hash-function calls, which
// an instrumented counter records.
//
// Statefulness contract: signing consumes one leaf per signature via an
// atomic compare-and-claim, so concurrent signers never reuse a leaf. The
// key is exhausted after 2^h signatures and then fails loudly.
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/crypto_suite.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/hash.hpp"

namespace pqtls::hashsig {

// ---------------------------------------------------------------------------
// WOTS parameters: n = 32 hash bytes, Winternitz w = 16.
// ---------------------------------------------------------------------------

inline constexpr int kHashLen = 32;
inline constexpr int kW = 16;
inline constexpr int kLogW = 4;
inline constexpr int kLen1 = (8 * kHashLen + kLogW - 1) / kLogW;  // digest digits

constexpr int base_w_digit_count(unsigned v) {
  int c = 0;
  while (v) {
    ++c;
    v /= kW;
  }
  return c == 0 ? 1 : c;
}

inline constexpr int kLen2 = base_w_digit_count(kLen1 * (kW - 1));  // checksum digits
inline constexpr int kLen = kLen1 + kLen2;
inline constexpr int kDefaultHeight = 10;
inline constexpr unsigned kMaxChecksum = kLen1 * (kW - 1);  // 960

static_assert(kLen1 == 64, "len1 = ceil(8n / log2 w)");
static_assert(kLen2 == 3, "len2 = floor(log2(len1*(w-1))/log2 w) + 1");
static_assert(kLen == 67);

constexpr std::size_t sig_len_for(int height) {
  return 4 + static_cast<std::size_t>(kLen) * kHashLen +
         static_cast<std::size_t>(height) * kHashLen;
}
static_assert(sig_len_for(kDefaultHeight) == 2468);

using Node = std::array<std::uint8_t, kHashLen>;

// Every SHA3-256 invocation made by this module bumps this counter; the
// bench reports it to substantiate the "numerous hash calls" cost profile.
inline std::atomic<std::uint64_t>& hash_call_counter() {
  static std::atomic<std::uint64_t> c{0};
  return c;
}

namespace detail {

// Domain-separation tags for the tweakable hash.
inline constexpr std::uint8_t kTagChain = 0x00;
inline constexpr std::uint8_t kTagLeafCompress = 0x01;
inline constexpr std::uint8_t kTagTreeNode = 0x02;
inline constexpr std::uint8_t kTagLeafSecret = 0x03;
inline constexpr std::uint8_t kTagMessage = 0x04;

inline Node counted_hash(BytesView in) {
  hash_call_counter().fetch_add(1, std::memory_order_relaxed);
  return hash::sha3_256(in);
}

inline Node message_digest(BytesView message) {
  Bytes in;
  in.reserve(1 + message.size());
  append_u8(in, kTagMessage);
  append(in, message);
  return counted_hash(in);
}

inline Node leaf_secret(BytesView seed, std::uint32_t leaf, std::uint16_t chain_idx) {
  hash_call_counter().fetch_add(1, std::memory_order_relaxed);
  Bytes in;
  in.reserve(seed.size() + 7);
  append(in, seed);
  append_u8(in, kTagLeafSecret);
  append_u32(in, leaf);
  append_u16(in, chain_idx);
  Bytes out = hash::shake128(in, kHashLen);
  Node n;
  std::copy(out.begin(), out.end(), n.begin());
  return n;
}

inline Node tree_node(int level, std::uint32_t index, const Node& left, const Node& right) {
  Bytes in;
  in.reserve(1 + 1 + 4 + 2 * kHashLen);
  append_u8(in, kTagTreeNode);
  append_u8(in, static_cast<std::uint8_t>(level));
  append_u32(in, index);
  append(in, left);
  append(in, right);
  return counted_hash(in);
}

}  // namespace detail

// Advances a WOTS chain value `steps` positions starting at `start`.
// F(addr, iter, x) = SHA3-256(tag || leaf || chain || iter || x); the
// iteration index rides along so intermediate values compose:
// chain(chain(x, 0, a), a, b) == chain(x, 0, a+b).
inline Node chain(Node x, int start, int steps, std::uint32_t leaf, std::uint16_t chain_idx) {
  if (start < 0 || steps < 0 || start + steps > kW - 1)
    throw ChainOverflowError("chain: start + steps must be <= " + std::to_string(kW - 1));
  for (int it = start; it < start + steps; ++it) {
    Bytes in;
    in.reserve(1 + 4 + 2 + 1 + kHashLen);
    append_u8(in, detail::kTagChain);
    append_u32(in, leaf);
    append_u16(in, chain_idx);
    append_u8(in, static_cast<std::uint8_t>(it));
    append(in, x);
    x = detail::counted_hash(in);
  }
  return x;
}

// Splits a 32-byte digest into 64 base-16 digits (big-endian nibble order)
// and appends the 3-digit base-16 checksum sum(15 - m_i), big-endian.
inline std::array<std::uint8_t, kLen> digest_digits(const Node& digest) {
  std::array<std::uint8_t, kLen> d{};
  unsigned csum = 0;
  for (int i = 0; i < kHashLen; ++i) {
    d[static_cast<std::size_t>(2 * i)] = digest[static_cast<std::size_t>(i)] >> 4;
    d[static_cast<std::size_t>(2 * i + 1)] = digest[static_cast<std::size_t>(i)] & 0x0F;
  }
  for (int i = 0; i < kLen1; ++i) csum += static_cast<unsigned>(kW - 1 - d[static_cast<std::size_t>(i)]);
  for (int i = 0; i < kLen2; ++i)
    d[static_cast<std::size_t>(kLen1 + i)] =
        static_cast<std::uint8_t>((csum >> (kLogW * (kLen2 - 1 - i))) & 0x0F);
  return d;
}

// Compresses the 67 chain-end values into the leaf public key.
inline Node leaf_compress(std::uint32_t leaf, const std::array<Node, kLen>& ends) {
  Bytes in;
  in.reserve(1 + 4 + static_cast<std::size_t>(kLen) * kHashLen);
  append_u8(in, detail::kTagLeafCompress);
  append_u32(in, leaf);
  for (const Node& e : ends) append(in, e);
  return detail::counted_hash(in);
}

// Signs a digest with leaf `leaf`: chain i advanced to position m_i.
inline std::array<Node, kLen> wots_sign(BytesView seed, std::uint32_t leaf, const Node& digest) {
  auto digits = digest_digits(digest);
  std::array<Node, kLen> out;
  for (int i = 0; i < kLen; ++i)
    out[static_cast<std::size_t>(i)] = chain(detail::leaf_secret(seed, leaf, static_cast<std::uint16_t>(i)), 0,
                                             digits[static_cast<std::size_t>(i)], leaf, static_cast<std::uint16_t>(i));
  return out;
}

// Completes each chain to position w-1 and compresses: reproduces the leaf
// public key iff (digest, chains) match a signature from that leaf.
inline Node wots_recover_pk(std::uint32_t leaf, const Node& digest,
                            const std::array<Node, kLen>& chains) {
  auto digits = digest_digits(digest);
  std::array<Node, kLen> ends;
  for (int i = 0; i < kLen; ++i)
    ends[static_cast<std::size_t>(i)] = chain(chains[static_cast<std::size_t>(i)], digits[static_cast<std::size_t>(i)],
                                              kW - 1 - digits[static_cast<std::size_t>(i)], leaf,
                                              static_cast<std::uint16_t>(i));
  return leaf_compress(leaf, ends);
}

// ---------------------------------------------------------------------------
// Merkle tree state
// ---------------------------------------------------------------------------

class XmssState {
 public:
  XmssState(Bytes seed, int height = kDefaultHeight) : seed_(std::move(seed)), height_(height) {
    if (height_ < 1 || height_ > 20) throw ConfigError("tree height out of range [1,20]");
    build();
  }

  const Node& root() const { return levels_.back()[0]; }
  int height() const { return height_; }
  std::uint32_t capacity() const { return 1u << height_; }

  // Leaves consumed so far, clamped to capacity.
  std::uint32_t leaves_used() const {
    std::uint32_t n = next_leaf_.load(std::memory_order_relaxed);
    return n > capacity() ? capacity() : n;
  }

  // Claims the next unused leaf and signs. The claim is atomic: concurrent
  // signers each get a distinct leaf or StateExhausted.
  Bytes sign(BytesView message) {
    std::uint32_t leaf = next_leaf_.fetch_add(1, std::memory_order_relaxed);
    if (leaf >= capacity())
      throw StateExhaustedError("hash-sig key exhausted after " + std::to_string(capacity()) +
                                " signatures");
    Node digest = detail::message_digest(message);
    auto chains = wots_sign(seed_, leaf, digest);

    Bytes sig;
    sig.reserve(sig_len_for(height_));
    append_u32(sig, leaf);
    for (const Node& c : chains) append(sig, c);
    for (int l = 0; l < height_; ++l)
      append(sig, levels_[static_cast<std::size_t>(l)][(leaf >> l) ^ 1u]);
    return sig;
  }

 private:
  void build() {
    levels_.resize(static_cast<std::size_t>(height_) + 1);
    std::uint32_t n = capacity();
    levels_[0].resize(n);
    for (std::uint32_t leaf = 0; leaf < n; ++leaf) {
      std::array<Node, kLen> ends;
      for (int i = 0; i < kLen; ++i)
        ends[static_cast<std::size_t>(i)] =
            chain(detail::leaf_secret(seed_, leaf, static_cast<std::uint16_t>(i)), 0, kW - 1, leaf,
                  static_cast<std::uint16_t>(i));
      levels_[0][leaf] = leaf_compress(leaf, ends);
    }
    for (int l = 1; l <= height_; ++l) {
      std::uint32_t width = n >> l;
      levels_[static_cast<std::size_t>(l)].resize(width);
      for (std::uint32_t i = 0; i < width; ++i)
        levels_[static_cast<std::size_t>(l)][i] =
            detail::tree_node(l, i, levels_[static_cast<std::size_t>(l - 1)][2 * i],
                              levels_[static_cast<std::size_t>(l - 1)][2 * i + 1]);
    }
  }

  Bytes seed_;
  int height_;
  std::vector<std::vector<Node>> levels_;  // levels_[0] = leaf pks, levels_[h][0] = root
  std::atomic<std::uint32_t> next_leaf_{0};
};

// Stateless verification: recover the leaf pk from the chains, fold the
// authentication path by index parity, compare with the root.
inline bool xmss_verify(BytesView root, BytesView message, BytesView signature,
                        int height = kDefaultHeight) {
  if (root.size() != kHashLen) throw WrongLengthError("xmss_verify: root must be 32 bytes");
  if (signature.size() != sig_len_for(height))
    throw WrongLengthError("xmss_verify: bad signature length");

  std::uint32_t leaf = read_u32(signature.data());
  if (leaf >= (1u << height)) return false;

  std::array<Node, kLen> chains;
  for (int i = 0; i < kLen; ++i)
    std::copy_n(signature.data() + 4 + static_cast<std::size_t>(i) * kHashLen, kHashLen,
                chains[static_cast<std::size_t>(i)].begin());

  Node node = wots_recover_pk(leaf, detail::message_digest(message), chains);
  std::size_t auth_off = 4 + static_cast<std::size_t>(kLen) * kHashLen;
  for (int l = 0; l < height; ++l) {
    Node sibling;
    std::copy_n(signature.data() + auth_off + static_cast<std::size_t>(l) * kHashLen, kHashLen,
                sibling.begin());
    std::uint32_t parent = leaf >> (l + 1);
    node = ((leaf >> l) & 1u) == 0 ? detail::tree_node(l + 1, parent, node, sibling)
                                   : detail::tree_node(l + 1, parent, sibling, node);
  }
  return ct_equal(node, BytesView(root));
}

// ---------------------------------------------------------------------------
// Provider
// ---------------------------------------------------------------------------

// The one stateful provider in the suite. Tree state is cached per secret
// key; the cache is unbounded (test/bench scale) and guarded by a mutex,
// while signing inside a state only contends on the atomic leaf counter.
class HashSigProvider final : public SigProvider {
 public:
  explicit HashSigProvider(int height = kDefaultHeight)
      : SigProvider(make_meta(AlgKind::sig, "sig.toy_wots_merkle", codes::toy_wots_merkle,
                              kHashLen, kSeedLen, sig_len_for(height), {1050000, 600, 550})),
        height_(height) {}

  // Get-or-build the Merkle state for a secret key (exposed so tests and
  // the bench can inspect leaf usage).
  std::shared_ptr<XmssState> state_for(BytesView sk) const {
    Bytes key(sk.begin(), sk.end());
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto state = std::make_shared<XmssState>(key, height_);
    cache_.emplace(std::move(key), state);
    return state;
  }

 private:
  SigKeyPair do_keygen(BytesView seed) const override {
    auto state = state_for(seed);
    SigKeyPair kp;
    kp.public_key.assign(state->root().begin(), state->root().end());
    kp.secret_key.assign(seed.begin(), seed.end());
    return kp;
  }

  Bytes do_sign(BytesView sk, BytesView message) const override {
    return state_for(sk)->sign(message);
  }

  bool do_verify(BytesView pk, BytesView message, BytesView signature) const override {
    return xmss_verify(pk, message, signature, height_);
  }

  int height_;
  mutable std::mutex mu_;
  mutable std::map<Bytes, std::shared_ptr<XmssState>> cache_;
};

}  // namespace pqtls::hashsig
