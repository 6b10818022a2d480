// Connection plumbing: a byte-stream abstraction with TCP and in-memory
// loopback implementations, length-framed message IO, per-connection
// drivers for both handshake roles, and a W-worker server runtime.
//
// Completion signaling: after the server accepts the client's Finished it
// half-closes the connection; the client treats clean EOF as "accepted" and
// an Alert frame as "rejected". A test-only key-echo frame (type 0xF0,
// outside the protocol's message space) lets integration tests confirm both
// sides derived identical keys.
#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pqtls/bytes.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/handshake.hpp"
#include "pqtls/registry.hpp"
#include "pqtls/wire.hpp"

namespace pqtls::transport {

inline constexpr std::uint8_t kKeyEchoFrameType = 0xF0;

// ---------------------------------------------------------------------------
// Byte streams
// ---------------------------------------------------------------------------

class ByteStream {
 public:
  virtual ~ByteStream() = default;

  // Reads up to n bytes. Returns 0 on clean EOF; throws TransportError on
  // socket errors and timeouts.
  virtual std::size_t read_some(std::uint8_t* buf, std::size_t n) = 0;
  virtual void write_all(BytesView data) = 0;
  virtual void close_write() = 0;  // half-close: signal EOF to the peer
  virtual void close() = 0;

  std::uint64_t bytes_read() const { return bytes_read_.load(std::memory_order_relaxed); }
  std::uint64_t bytes_written() const { return bytes_written_.load(std::memory_order_relaxed); }

 protected:
  std::atomic<std::uint64_t> bytes_read_{0};
  std::atomic<std::uint64_t> bytes_written_{0};
};

// Reads one complete frame (header + payload). Returns nullopt on clean EOF
// at a frame boundary; mid-frame EOF is a TransportError and an oversized
// length prefix is a DecodeError (no allocation happens for it).
inline std::optional<Bytes> read_frame(ByteStream& s) {
  Bytes frame(wire::kFrameHeaderLen);
  std::size_t got = 0;
  while (got < wire::kFrameHeaderLen) {
    std::size_t n = s.read_some(frame.data() + got, wire::kFrameHeaderLen - got);
    if (n == 0) {
      if (got == 0) return std::nullopt;
      throw TransportError("connection closed mid-frame header");
    }
    got += n;
  }
  std::uint32_t len = read_u32(frame.data() + 1);
  if (len > wire::kMaxFrameLen) throw DecodeError("frame payload longer than 1 MiB");
  frame.resize(wire::kFrameHeaderLen + len);
  got = 0;
  while (got < len) {
    std::size_t n = s.read_some(frame.data() + wire::kFrameHeaderLen + got, len - got);
    if (n == 0) throw TransportError("connection closed mid-frame payload");
    got += n;
  }
  return frame;
}

// ---------------------------------------------------------------------------
// In-memory loopback with optional link shaping
// ---------------------------------------------------------------------------

struct LinkOptions {
  std::chrono::nanoseconds latency{0};  // one-way propagation delay
  std::uint64_t bandwidth_bps = 0;      // bytes per second; 0 = unlimited
};

namespace detail {

// One direction of a loopback link: a queue of byte chunks, each tagged
// with the instant it becomes visible to the reader. Serialization delay
// (size/bandwidth) accrues back-to-back via next_free; propagation delay is
// added per chunk, so delivery_time = send_start + size/bw + latency.
struct Pipe {
  explicit Pipe(LinkOptions opts) : link(opts) {}

  void write(BytesView data) {
    std::lock_guard<std::mutex> lk(mu);
    if (closed) throw TransportError("loopback pipe closed");
    auto now = std::chrono::steady_clock::now();
    auto start = std::max(now, next_free);
    std::chrono::nanoseconds tx{0};
    if (link.bandwidth_bps > 0)
      tx = std::chrono::nanoseconds(
          static_cast<std::int64_t>(static_cast<double>(data.size()) * 1e9 /
                                    static_cast<double>(link.bandwidth_bps)));
    next_free = start + tx;
    chunks.push_back(Chunk{start + tx + link.latency, Bytes(data.begin(), data.end()), 0});
    cv.notify_all();
  }

  std::size_t read(std::uint8_t* buf, std::size_t n) {
    std::unique_lock<std::mutex> lk(mu);
    for (;;) {
      if (!chunks.empty()) {
        if (chunks.front().ready <= std::chrono::steady_clock::now()) break;
        cv.wait_until(lk, chunks.front().ready);
        continue;
      }
      if (closed) return 0;
      cv.wait(lk);
    }
    Chunk& front = chunks.front();
    std::size_t take = std::min(n, front.data.size() - front.offset);
    std::memcpy(buf, front.data.data() + front.offset, take);
    front.offset += take;
    if (front.offset == front.data.size()) chunks.pop_front();
    return take;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(mu);
      closed = true;
    }
    cv.notify_all();
  }

  struct Chunk {
    std::chrono::steady_clock::time_point ready;
    Bytes data;
    std::size_t offset;
  };

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Chunk> chunks;
  bool closed = false;
  std::chrono::steady_clock::time_point next_free = std::chrono::steady_clock::now();
  LinkOptions link;
};

}  // namespace detail

class LoopbackStream final : public ByteStream {
 public:
  LoopbackStream(std::shared_ptr<detail::Pipe> in, std::shared_ptr<detail::Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}

  ~LoopbackStream() override { close(); }

  std::size_t read_some(std::uint8_t* buf, std::size_t n) override {
    std::size_t got = in_->read(buf, n);
    bytes_read_.fetch_add(got, std::memory_order_relaxed);
    return got;
  }

  void write_all(BytesView data) override {
    out_->write(data);
    bytes_written_.fetch_add(data.size(), std::memory_order_relaxed);
  }

  void close_write() override { out_->close(); }

  void close() override {
    out_->close();
    in_->close();  // reader still drains chunks already queued, then EOF
  }

 private:
  std::shared_ptr<detail::Pipe> in_;
  std::shared_ptr<detail::Pipe> out_;
};

// Two connected endpoints; `a_to_b` shapes traffic written by the first.
inline std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> loopback_pair(
    LinkOptions a_to_b = {}, LinkOptions b_to_a = {}) {
  auto ab = std::make_shared<detail::Pipe>(a_to_b);
  auto ba = std::make_shared<detail::Pipe>(b_to_a);
  return {std::make_unique<LoopbackStream>(ba, ab), std::make_unique<LoopbackStream>(ab, ba)};
}

// ---------------------------------------------------------------------------
// TCP
// ---------------------------------------------------------------------------

class TcpStream final : public ByteStream {
 public:
  TcpStream(int fd, std::chrono::milliseconds io_timeout) : fd_(fd) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(io_timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>(io_timeout.count() % 1000 * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  ~TcpStream() override { close(); }

  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  std::size_t read_some(std::uint8_t* buf, std::size_t n) override {
    for (;;) {
      ssize_t r = ::recv(fd_, buf, n, 0);
      if (r > 0) {
        bytes_read_.fetch_add(static_cast<std::uint64_t>(r), std::memory_order_relaxed);
        return static_cast<std::size_t>(r);
      }
      if (r == 0) return 0;
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("read timeout");
      throw TransportError(std::string("recv: ") + std::strerror(errno));
    }
  }

  void write_all(BytesView data) override {
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t r = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (r < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("write timeout");
        throw TransportError(std::string("send: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(r);
      bytes_written_.fetch_add(static_cast<std::uint64_t>(r), std::memory_order_relaxed);
    }
  }

  void close_write() override { ::shutdown(fd_, SHUT_WR); }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

namespace detail {
inline int connect_fd(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw TransportError("cannot resolve host " + host);
  int fd = -1;
  std::string err = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    err = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw TransportError("connect to " + host + ":" + std::to_string(port) + ": " + err);
  return fd;
}
}  // namespace detail

class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
      throw TransportError("cannot resolve listen host " + host);
    std::string err = "no usable address";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd_ < 0) continue;
      int one = 1;
      ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd_, 128) == 0) break;
      err = std::strerror(errno);
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw TransportError("bind " + host + ":" + std::to_string(port) + ": " + err);
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6
                ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  }

  ~TcpListener() { close(); }

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // Waits up to `wait` for a connection; nullopt on timeout.
  std::optional<int> accept_fd(std::chrono::milliseconds wait) {
    pollfd pfd{fd_, POLLIN, 0};
    int r = ::poll(&pfd, 1, static_cast<int>(wait.count()));
    if (r <= 0) return std::nullopt;
    int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) return std::nullopt;
    return cfd;
  }

  std::uint16_t port() const { return port_; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// ---------------------------------------------------------------------------
// Per-connection metrics
// ---------------------------------------------------------------------------

enum class Outcome : std::uint8_t {
  success,
  decode_error,
  bad_signature,
  bad_certificate,
  unsupported_algorithm,
  bad_finished,
  overload,
  transport_error,
};

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::decode_error: return "decode_error";
    case Outcome::bad_signature: return "bad_signature";
    case Outcome::bad_certificate: return "bad_certificate";
    case Outcome::unsupported_algorithm: return "unsupported_algorithm";
    case Outcome::bad_finished: return "bad_finished";
    case Outcome::overload: return "overload";
    case Outcome::transport_error: return "transport_error";
  }
  return "unknown";
}

inline Outcome outcome_of(wire::AlertCode code) {
  switch (code) {
    case wire::AlertCode::decode_error: return Outcome::decode_error;
    case wire::AlertCode::bad_signature: return Outcome::bad_signature;
    case wire::AlertCode::bad_certificate: return Outcome::bad_certificate;
    case wire::AlertCode::unsupported_algorithm: return Outcome::unsupported_algorithm;
    case wire::AlertCode::bad_finished: return Outcome::bad_finished;
  }
  return Outcome::transport_error;
}

struct ConnStats {
  Outcome outcome = Outcome::transport_error;
  std::uint64_t latency_ns = 0;  // whole-handshake wall clock on this side
  std::uint64_t bytes_sent = 0;  // sum of encoded frame sizes
  std::uint64_t bytes_received = 0;
  handshake::HandshakeTimings phases;
  // Server-side crypto window, for serialization analysis under W=1.
  std::uint64_t compute_start_ns = 0;
  std::uint64_t compute_end_ns = 0;
};

namespace detail {
inline std::uint64_t now_ns() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::steady_clock::now().time_since_epoch())
                                        .count());
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Connection drivers (shared by TCP and loopback paths)
// ---------------------------------------------------------------------------

inline std::array<std::uint8_t, 32> key_echo_digest(const handshake::SessionKeys& keys) {
  return hash::sha3_256(concat(keys.client_traffic, keys.server_traffic));
}

struct ServerEnv {
  const Registry* registry = nullptr;  // nullptr -> default_registry()
  handshake::ServerIdentity identity;
  handshake::ServerFaults faults{};
  bool key_echo = false;

  const Registry& reg() const { return registry ? *registry : default_registry(); }
};

// Runs the server side of one connection; never throws — every failure mode
// is an Outcome.
inline ConnStats serve_connection_on(ByteStream& s, const ServerEnv& env, BytesView rng_seed) {
  ConnStats stats;
  std::uint64_t t0 = detail::now_ns();
  auto send_alert = [&](wire::AlertCode code, const std::string& detail_text) {
    try {
      Bytes af = wire::encode_message(wire::Alert{code, detail_text});
      s.write_all(af);
      stats.bytes_sent += af.size();
    } catch (...) {
      // peer already gone; the outcome classification stands
    }
  };

  try {
    auto f = read_frame(s);
    if (!f) throw TransportError("connection closed before ClientHello");
    stats.bytes_received += f->size();
    wire::Message msg = wire::decode_message(*f);
    auto* ch = std::get_if<wire::ClientHello>(&msg);
    if (!ch) throw DecodeError("expected ClientHello");

    stats.compute_start_ns = detail::now_ns();
    handshake::ServerResult sr =
        handshake::server_respond(env.reg(), env.identity, *ch, rng_seed, env.faults);
    stats.phases = sr.timings;
    Bytes shf = wire::frame(wire::MsgType::server_hello, sr.sh_payload);
    s.write_all(shf);
    stats.bytes_sent += shf.size();

    auto f2 = read_frame(s);
    if (!f2) throw TransportError("connection closed before Finished");
    stats.bytes_received += f2->size();
    wire::Message m2 = wire::decode_message(*f2);
    if (auto* alert = std::get_if<wire::Alert>(&m2)) {
      stats.outcome = outcome_of(alert->code);
      s.close();
      stats.latency_ns = detail::now_ns() - t0;
      return stats;
    }
    auto* fin = std::get_if<wire::Finished>(&m2);
    if (!fin) throw DecodeError("expected Finished");
    handshake::server_process_finished(sr, *fin);
    stats.compute_end_ns = detail::now_ns();

    if (env.key_echo) {
      Bytes echo = wire::frame(static_cast<wire::MsgType>(kKeyEchoFrameType),
                               key_echo_digest(sr.keys));
      s.write_all(echo);
      stats.bytes_sent += echo.size();
    }
    s.close_write();  // clean EOF tells the client the Finished was accepted
    stats.outcome = Outcome::success;
  } catch (const handshake::HandshakeAlert& a) {
    send_alert(a.code(), a.detail());
    stats.outcome = outcome_of(a.code());
  } catch (const DecodeError& e) {
    send_alert(wire::AlertCode::decode_error, e.what());
    stats.outcome = Outcome::decode_error;
  } catch (const TransportError&) {
    stats.outcome = Outcome::transport_error;
  }
  s.close();
  stats.latency_ns = detail::now_ns() - t0;
  return stats;
}

inline std::chrono::milliseconds default_client_timeout() {
  static const std::chrono::milliseconds cached = [] {
    if (const char* e = std::getenv("PQTLS_TIMEOUT_MS")) {
      long v = std::strtol(e, nullptr, 10);
      if (v > 0) return std::chrono::milliseconds(v);
    }
    return std::chrono::milliseconds(10000);
  }();
  return cached;
}

struct ClientOptions {
  Bytes rng_seed = Bytes(32, 0x11);
  std::chrono::milliseconds timeout = default_client_timeout();
  bool expect_key_echo = false;
};

struct ClientHandshakeResult {
  handshake::SessionKeys keys;
  ConnStats stats;
};

// Runs the client side of one connection. Throws AlertReceivedError when
// the server rejects, HandshakeAlert when the client itself aborts (after
// sending the alert), TransportError/DecodeError on plumbing failures.
inline ClientHandshakeResult client_handshake_on(ByteStream& s, const Registry& reg,
                                                 const handshake::ClientConfig& cfg,
                                                 const ClientOptions& opts) {
  ConnStats stats;
  std::uint64_t t0 = detail::now_ns();
  try {
    handshake::ClientPending pending = handshake::client_begin(reg, cfg, opts.rng_seed);
    Bytes chf = wire::frame(wire::MsgType::client_hello, pending.ch_payload);
    s.write_all(chf);
    stats.bytes_sent += chf.size();

    auto f = read_frame(s);
    if (!f) throw TransportError("connection closed before ServerHello");
    stats.bytes_received += f->size();
    wire::Message msg = wire::decode_message(*f);
    if (auto* alert = std::get_if<wire::Alert>(&msg))
      throw handshake::AlertReceivedError(alert->code, alert->detail);
    auto* sh = std::get_if<wire::ServerHello>(&msg);
    if (!sh) throw DecodeError("expected ServerHello");

    handshake::ClientResult cr = handshake::client_process_server_hello(reg, pending, *sh);
    stats.phases = cr.timings;
    Bytes finf = wire::frame(wire::MsgType::finished, wire::encode_payload(cr.finished));
    s.write_all(finf);
    stats.bytes_sent += finf.size();

    if (opts.expect_key_echo) {
      auto ef = read_frame(s);
      if (!ef || ef->at(0) != kKeyEchoFrameType)
        throw TransportError("expected key-echo frame");
      stats.bytes_received += ef->size();
      auto expect = key_echo_digest(cr.keys);
      if (!ct_equal(BytesView(ef->data() + wire::kFrameHeaderLen,
                              ef->size() - wire::kFrameHeaderLen),
                    BytesView(expect)))
        throw TransportError("key-echo digest mismatch: peer derived different keys");
    }

    // Completion signal: clean EOF = accepted, Alert frame = rejected.
    auto f2 = read_frame(s);
    if (f2) {
      stats.bytes_received += f2->size();
      wire::Message m2 = wire::decode_message(*f2);
      if (auto* alert = std::get_if<wire::Alert>(&m2))
        throw handshake::AlertReceivedError(alert->code, alert->detail);
      throw DecodeError("unexpected message after Finished");
    }
    s.close();
    stats.outcome = Outcome::success;
    stats.latency_ns = detail::now_ns() - t0;
    return ClientHandshakeResult{cr.keys, stats};
  } catch (const handshake::HandshakeAlert& a) {
    // Local abort: tell the peer why, then close and surface the error.
    try {
      Bytes af = wire::encode_message(wire::Alert{a.code(), a.detail()});
      s.write_all(af);
    } catch (...) {
    }
    s.close();
    throw;
  } catch (...) {
    s.close();
    throw;
  }
}

inline ClientHandshakeResult connect_and_handshake(const Registry& reg,
                                                   const handshake::ClientConfig& cfg,
                                                   const std::string& host, std::uint16_t port,
                                                   const ClientOptions& opts = {}) {
  TcpStream stream(detail::connect_fd(host, port), opts.timeout);
  return client_handshake_on(stream, reg, cfg, opts);
}

// ---------------------------------------------------------------------------
// Server runtime
// ---------------------------------------------------------------------------

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = pick an ephemeral port
  int workers = 1;
  std::size_t max_connections = 256;  // queued + in-flight cap

  std::uint16_t sig_alg = codes::mock_falcon512;
  Bytes identity_seed = Bytes(32, 0x42);
  std::string subject = "pqtls-server";
  std::uint16_t root_sig_alg = codes::mock_dilithium2;
  Bytes root_seed = Bytes(32, 0x52);
  Bytes rng_seed = Bytes(32, 0x62);  // base for per-connection server randomness

  bool key_echo = false;
  handshake::ServerFaults faults{};
  const Registry* registry = nullptr;  // nullptr -> default_registry()
  std::chrono::milliseconds io_timeout{10000};
};

class Server {
 public:
  explicit Server(ServerConfig cfg)
      : cfg_(std::move(cfg)), listener_(cfg_.host, cfg_.port) {
    if (cfg_.workers < 1) throw ConfigError("server needs at least one worker");
    const Registry& reg = cfg_.registry ? *cfg_.registry : default_registry();
    root_ = handshake::make_trust_root(reg, cfg_.root_sig_alg, cfg_.root_seed);
    env_.registry = &reg;
    env_.identity = handshake::make_server_identity(reg, cfg_.sig_alg, cfg_.identity_seed,
                                                    cfg_.subject, root_);
    env_.faults = cfg_.faults;
    env_.key_echo = cfg_.key_echo;

    accept_thread_ = std::thread([this] { accept_loop(); });
    for (int i = 0; i < cfg_.workers; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  ~Server() { stop(); }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  std::string address() const { return cfg_.host + ":" + std::to_string(port()); }
  const handshake::TrustAnchor& anchor() const { return root_.anchor; }
  const ServerConfig& config() const { return cfg_; }

  // Stops accepting, drains queued and in-flight handshakes for up to 5
  // seconds, force-closes stragglers, joins all threads. Idempotent.
  void stop() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    if (accept_thread_.joinable()) accept_thread_.join();

    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    for (;;) {
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (pending_.empty() && active_fds_.empty()) break;
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        std::lock_guard<std::mutex> lk(mu_);
        for (int fd : pending_) ::shutdown(fd, SHUT_RDWR);
        for (int fd : active_fds_) ::shutdown(fd, SHUT_RDWR);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    cv_.notify_all();
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    listener_.close();
  }

  std::vector<ConnStats> stats() const {
    std::lock_guard<std::mutex> lk(stats_mu_);
    return stats_;
  }

  std::uint64_t accepted() const { return accepted_.load(); }
  std::uint64_t completed() const { return completed_.load(); }
  std::uint64_t failed() const { return failed_.load(); }

 private:
  void accept_loop() {
    for (;;) {
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (stopping_) return;
      }
      auto fd = listener_.accept_fd(std::chrono::milliseconds(100));
      if (!fd) continue;
      accepted_.fetch_add(1);
      bool reject;
      {
        std::lock_guard<std::mutex> lk(mu_);
        reject = pending_.size() + active_fds_.size() >= cfg_.max_connections;
        if (!reject) pending_.push_back(*fd);
      }
      if (reject) {
        // Over the connection cap: refuse with a fatal alert. The closed
        // alert-code set has no dedicated overload code, so decode_error
        // carries an explanatory detail; locally the outcome is distinct.
        TcpStream s(*fd, std::chrono::milliseconds(1000));
        ConnStats stats;
        stats.outcome = Outcome::overload;
        try {
          Bytes af = wire::encode_message(
              wire::Alert{wire::AlertCode::decode_error, "connection limit reached"});
          s.write_all(af);
          stats.bytes_sent += af.size();
        } catch (...) {
        }
        s.close();
        record(stats);
      } else {
        cv_.notify_one();
      }
    }
  }

  void worker_loop() {
    for (;;) {
      int fd;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stopping_ || !pending_.empty(); });
        if (pending_.empty()) {
          if (stopping_) return;
          continue;
        }
        fd = pending_.front();
        pending_.pop_front();
        active_fds_.insert(fd);
      }
      std::uint64_t seq = conn_seq_.fetch_add(1);
      Bytes rng = hash::shake256(conn_seed_input(seq), 32);
      ConnStats stats;
      {
        TcpStream stream(fd, cfg_.io_timeout);
        stats = serve_connection_on(stream, env_, rng);
      }
      {
        std::lock_guard<std::mutex> lk(mu_);
        active_fds_.erase(fd);
      }
      record(stats);
    }
  }

  Bytes conn_seed_input(std::uint64_t seq) const {
    Bytes in = cfg_.rng_seed;
    for (int i = 7; i >= 0; --i) in.push_back(static_cast<std::uint8_t>(seq >> (8 * i)));
    return in;
  }

  void record(const ConnStats& stats) {
    if (stats.outcome == Outcome::success)
      completed_.fetch_add(1);
    else
      failed_.fetch_add(1);
    std::lock_guard<std::mutex> lk(stats_mu_);
    stats_.push_back(stats);
  }

  ServerConfig cfg_;
  TcpListener listener_;
  handshake::TrustRoot root_;
  ServerEnv env_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::deque<int> pending_;
  std::set<int> active_fds_;

  std::atomic<std::uint64_t> conn_seq_{0};
  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint64_t> failed_{0};

  mutable std::mutex stats_mu_;
  std::vector<ConnStats> stats_;

  std::thread accept_thread_;
  std::vector<std::thread> workers_;
};

}  // namespace pqtls::transport
