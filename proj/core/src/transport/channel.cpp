#include "mmsf/transport/channel.hpp"

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "mmsf/transport/frame.hpp"
#include "transport/handshake.hpp"
#include "transport/socket.hpp"

namespace mmsf::transport {
namespace {

// Upper bound on a single chunk accepted from the wire.
constexpr std::uint32_t kMaxChunkLen = 64u << 20;

class InprocQueue {
 public:
  void push(bytes::Buffer frame) {
    {
      std::lock_guard lock(mu_);
      if (closed_) throw IoError("send on closed in-process channel");
      frames_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  std::optional<bytes::Buffer> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !frames_.empty() || closed_; });
    if (frames_.empty()) return std::nullopt;
    auto f = std::move(frames_.front());
    frames_.pop_front();
    return f;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<bytes::Buffer> frames_;
  bool closed_ = false;
};

class InprocChannel final : public Channel {
 public:
  InprocChannel(std::string name, std::shared_ptr<InprocQueue> out, std::shared_ptr<InprocQueue> in)
      : name_(std::move(name)), out_(std::move(out)), in_(std::move(in)) {}

  ~InprocChannel() override { close_send(); }

  const std::string& name() const override { return name_; }
  int streams() const override { return 1; }

  void send_framed(std::span<const std::byte> frame, ChunkPacer* pacer) override {
    if (pacer) pacer->before_chunk(frame.size());
    out_->push(bytes::Buffer(frame.begin(), frame.end()));
  }

  std::optional<bytes::Buffer> recv_framed() override {
    auto frame = in_->pop();
    if (frame) decode_frame(*frame);
    return frame;
  }

  void close_send() override { out_->close(); }

  void close() override {
    out_->close();
    in_->close();
  }

 private:
  std::string name_;
  std::shared_ptr<InprocQueue> out_;
  std::shared_ptr<InprocQueue> in_;
};

// Named in-process channels opened through open_channel share one queue.
std::shared_ptr<InprocQueue> named_inproc_queue(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, std::weak_ptr<InprocQueue>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[name];
  auto q = slot.lock();
  if (!q) {
    q = std::make_shared<InprocQueue>();
    slot = q;
  }
  return q;
}

class TcpChannel final : public Channel {
 public:
  TcpChannel(std::string name, std::vector<net::Socket> streams, StreamConfig config)
      : name_(std::move(name)), streams_(std::move(streams)), config_(config) {}

  ~TcpChannel() override { close(); }

  const std::string& name() const override { return name_; }
  int streams() const override { return static_cast<int>(streams_.size()); }

  void send_framed(std::span<const std::byte> frame, ChunkPacer* pacer) override {
    std::lock_guard lock(send_mu_);
    if (send_closed_) throw IoError("send on closed channel '" + name_ + "'");
    const auto count = chunk_count_for(frame.size(), config_.chunk_size);
    const auto seq = next_send_seq_++;
    std::array<std::byte, kChunkHeaderSize> header{};
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto off = static_cast<std::size_t>(i) * config_.chunk_size;
      const auto len = std::min(config_.chunk_size, frame.size() - std::min(off, frame.size()));
      if (pacer) pacer->before_chunk(len);
      encode_chunk_header({seq, i, count, static_cast<std::uint32_t>(len)}, header);
      const auto& s = streams_[i % streams_.size()];
      try {
        net::write_all(s, header, config_.io_timeout);
        net::write_all(s, frame.subspan(off, len), config_.io_timeout);
      } catch (const IoError& e) {
        fail_send();
        throw IoError("channel '" + name_ + "': " + e.what());
      }
    }
  }

  std::optional<bytes::Buffer> recv_framed() override {
    std::lock_guard lock(recv_mu_);
    if (recv_done_) return std::nullopt;
    try {
      std::array<std::byte, kChunkHeaderSize> raw{};
      if (!net::read_exact(streams_[0], raw, net::kForever)) {
        if (closed_) return std::nullopt;
        throw IoError("connection closed without end-of-channel marker");
      }
      auto first = decode_chunk_header(raw);
      if (first.end_of_channel()) {
        recv_done_ = true;
        return std::nullopt;
      }
      check_header(first, 0, first.chunk_count);
      bytes::Buffer frame;
      frame.reserve(static_cast<std::size_t>(first.chunk_count) * first.chunk_len);
      read_body(streams_[0], first.chunk_len, frame);
      for (std::uint32_t i = 1; i < first.chunk_count; ++i) {
        const auto& s = streams_[i % streams_.size()];
        if (!net::read_exact(s, raw, config_.io_timeout)) throw IoError("stream closed mid-frame");
        auto h = decode_chunk_header(raw);
        check_header(h, i, first.chunk_count);
        read_body(s, h.chunk_len, frame);
      }
      ++next_recv_seq_;
      decode_frame(frame);
      return frame;
    } catch (const ChecksumError&) {
      throw;
    } catch (const IoError& e) {
      if (closed_) return std::nullopt;
      throw IoError("channel '" + name_ + "': " + e.what());
    }
  }

  void close_send() override {
    std::lock_guard lock(send_mu_);
    if (send_closed_) return;
    send_closed_ = true;
    std::array<std::byte, kChunkHeaderSize> header{};
    encode_chunk_header({next_send_seq_, 0, 0, 0}, header);
    try {
      net::write_all(streams_[0], header, config_.io_timeout);
    } catch (const IoError&) {
      // Peer already gone; nothing left to flush.
    }
    for (const auto& s : streams_) s.shutdown_write();
  }

  void close() override {
    closed_ = true;
    for (const auto& s : streams_) s.shutdown_both();
  }

 private:
  void check_header(const ChunkHeader& h, std::uint32_t idx, std::uint32_t count) const {
    if (h.frame_seq != next_recv_seq_ || h.chunk_idx != idx || h.chunk_count != count) {
      throw IoError("out-of-order chunk: got seq " + std::to_string(h.frame_seq) + " idx " +
                    std::to_string(h.chunk_idx) + "/" + std::to_string(h.chunk_count) + ", expected seq " +
                    std::to_string(next_recv_seq_) + " idx " + std::to_string(idx) + "/" + std::to_string(count));
    }
    if (h.chunk_len > kMaxChunkLen) throw IoError("chunk length " + std::to_string(h.chunk_len) + " too large");
  }

  void read_body(const net::Socket& s, std::uint32_t len, bytes::Buffer& frame) const {
    const auto off = frame.size();
    frame.resize(off + len);
    if (len > 0 && !net::read_exact(s, std::span(frame).subspan(off, len), config_.io_timeout)) {
      throw IoError("stream closed mid-frame");
    }
  }

  void fail_send() {
    send_closed_ = true;
    for (const auto& s : streams_) s.shutdown_both();
  }

  std::string name_;
  std::vector<net::Socket> streams_;
  StreamConfig config_;
  std::mutex send_mu_;
  std::mutex recv_mu_;
  std::uint64_t next_send_seq_ = 0;
  std::uint64_t next_recv_seq_ = 0;
  bool send_closed_ = false;
  bool recv_done_ = false;
  std::atomic<bool> closed_{false};
};

std::vector<net::Socket> connect_streams(const std::string& channel, const HostPort& first_hop,
                                         const StreamConfig& config, const std::string& hop_label) {
  std::vector<net::Socket> streams;
  for (int i = 0; i < config.streams; ++i) {
    net::Socket s;
    try {
      s = net::connect_tcp(first_hop.host, first_hop.port, config.connect_timeout);
    } catch (const ConnectError& e) {
      throw ConnectError(hop_label + " " + first_hop.to_string() + " unreachable: " + e.what());
    }
    const auto hello = format_hello({channel, i, config.streams});
    std::string reply;
    try {
      net::write_all(s, bytes::as_bytes(hello), config.connect_timeout);
      reply = net::read_line(s, config.connect_timeout);
    } catch (const IoError& e) {
      throw ConnectError("handshake with " + first_hop.to_string() + " failed: " + e.what());
    }
    if (reply != kHelloOk) {
      throw ConnectError("channel '" + channel + "' refused by " + first_hop.to_string() + ": " + reply);
    }
    streams.push_back(std::move(s));
  }
  return streams;
}

}  // namespace

HostPort parse_host_port(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error("invalid endpoint '" + std::string(text) + "': expected host:port");
  }
  unsigned port = 0;
  auto digits = text.substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty() || port > 65535) {
    throw Error("invalid port in endpoint '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

EndpointAddress EndpointAddress::inproc(std::string channel) {
  return {AddressKind::kInproc, std::move(channel), {}, {}};
}

EndpointAddress EndpointAddress::tcp(std::string channel, HostPort target) {
  return {AddressKind::kTcp, std::move(channel), std::move(target), {}};
}

EndpointAddress EndpointAddress::relayed(std::string channel, std::vector<HostPort> hops, HostPort target) {
  return {AddressKind::kRelayed, std::move(channel), std::move(target), std::move(hops)};
}

void StreamConfig::validate() const {
  if (streams < 1) throw Error("stream count must be at least 1, got " + std::to_string(streams));
  if (chunk_size < kMinChunkSize) {
    throw Error("chunk size must be at least " + std::to_string(kMinChunkSize) + " bytes, got " +
                std::to_string(chunk_size));
  }
}

std::unique_ptr<Channel> open_channel(const EndpointAddress& address, const StreamConfig& config) {
  config.validate();
  if (address.channel.empty() || address.channel.find_first_of(" \t\r\n") != std::string::npos) {
    throw Error("invalid channel name '" + address.channel + "'");
  }
  switch (address.kind) {
    case AddressKind::kInproc: {
      auto q = named_inproc_queue(address.channel);
      return std::make_unique<InprocChannel>(address.channel, q, q);
    }
    case AddressKind::kTcp:
      return std::make_unique<TcpChannel>(address.channel,
                                          connect_streams(address.channel, address.target, config, "endpoint"),
                                          config);
    case AddressKind::kRelayed: {
      if (address.hops.empty()) throw Error("relayed address for '" + address.channel + "' has no hops");
      std::set<HostPort> seen;
      for (const auto& hop : address.hops) {
        if (!seen.insert(hop).second) throw Error("relay hop " + hop.to_string() + " appears twice");
      }
      return std::make_unique<TcpChannel>(
          address.channel, connect_streams(address.channel, address.hops.front(), config, "relay hop"), config);
    }
  }
  throw Error("unknown address kind");
}

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> inproc_pair(const std::string& name) {
  auto ab = std::make_shared<InprocQueue>();
  auto ba = std::make_shared<InprocQueue>();
  return {std::make_unique<InprocChannel>(name, ab, ba), std::make_unique<InprocChannel>(name, ba, ab)};
}

struct Listener::State {
  net::Socket socket;
  HostPort address;
  std::optional<std::set<std::string>> allowlist;
  StreamConfig config;

  struct Pending {
    int streams = 0;
    std::vector<net::Socket> sockets;
    int arrived = 0;
  };

  mutable std::mutex mu;
  std::condition_variable cv;
  std::map<std::string, Pending> pending;
  std::map<std::string, std::vector<net::Socket>> ready;
  std::vector<std::string> rejected;
  std::atomic<bool> stopping{false};
  std::thread acceptor;

  void reject(net::Socket& s, const std::string& reason) {
    try {
      net::write_all(s, bytes::as_bytes("ERR " + reason + "\n"), config.connect_timeout);
    } catch (const IoError&) {
    }
    std::lock_guard lock(mu);
    rejected.push_back(reason);
  }

  void handle(net::Socket s) {
    std::string line;
    try {
      line = net::read_line(s, config.connect_timeout);
    } catch (const IoError& e) {
      std::lock_guard lock(mu);
      rejected.push_back(std::string("bad handshake: ") + e.what());
      return;
    }
    auto hello = parse_hello(line);
    if (!hello) return reject(s, "malformed handshake '" + line + "'");
    if (allowlist && !allowlist->count(hello->channel)) {
      return reject(s, "channel '" + hello->channel + "' not allowed");
    }
    std::unique_lock lock(mu);
    if (ready.count(hello->channel)) {
      lock.unlock();
      return reject(s, "channel '" + hello->channel + "' already connected");
    }
    auto& p = pending[hello->channel];
    if (p.streams == 0) {
      p.streams = hello->streams;
      p.sockets.resize(static_cast<std::size_t>(hello->streams));
    }
    if (p.streams != hello->streams || p.sockets[static_cast<std::size_t>(hello->index)].valid()) {
      lock.unlock();
      return reject(s, "inconsistent stream " + std::to_string(hello->index) + "/" + std::to_string(hello->streams) +
                           " for channel '" + hello->channel + "'");
    }
    try {
      net::write_all(s, bytes::as_bytes(std::string(kHelloOk) + "\n"), config.connect_timeout);
    } catch (const IoError&) {
      return;
    }
    p.sockets[static_cast<std::size_t>(hello->index)] = std::move(s);
    if (++p.arrived == p.streams) {
      ready[hello->channel] = std::move(p.sockets);
      pending.erase(hello->channel);
      lock.unlock();
      cv.notify_all();
    }
  }

  void run() {
    while (!stopping) {
      auto s = net::accept_tcp(socket, std::chrono::milliseconds(100));
      if (s.valid()) handle(std::move(s));
    }
  }
};

Listener::Listener(HostPort bind, std::optional<std::set<std::string>> allowlist, StreamConfig config)
    : state_(std::make_unique<State>()) {
  config.validate();
  state_->socket = net::listen_tcp(bind.host, bind.port);
  state_->address = {bind.host, net::local_port(state_->socket)};
  state_->allowlist = std::move(allowlist);
  state_->config = config;
  state_->acceptor = std::thread([s = state_.get()] { s->run(); });
}

Listener::~Listener() { stop(); }

HostPort Listener::address() const { return state_->address; }
std::uint16_t Listener::port() const { return state_->address.port; }

std::unique_ptr<Channel> Listener::accept(const std::string& channel, std::chrono::milliseconds timeout) {
  std::unique_lock lock(state_->mu);
  const bool ok = state_->cv.wait_for(lock, timeout, [&] { return state_->ready.count(channel) || state_->stopping; });
  if (!ok || !state_->ready.count(channel)) {
    throw ConnectError("no connection for channel '" + channel + "' on " + state_->address.to_string());
  }
  auto sockets = std::move(state_->ready[channel]);
  state_->ready.erase(channel);
  return std::make_unique<TcpChannel>(channel, std::move(sockets), state_->config);
}

std::vector<std::string> Listener::rejected() const {
  std::lock_guard lock(state_->mu);
  return state_->rejected;
}

void Listener::stop() {
  if (!state_ || state_->stopping.exchange(true)) return;
  state_->socket.shutdown_both();
  if (state_->acceptor.joinable()) state_->acceptor.join();
  state_->cv.notify_all();
}

}  // namespace mmsf::transport
