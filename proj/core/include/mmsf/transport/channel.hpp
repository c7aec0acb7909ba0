#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mmsf/bytes.hpp"
#include "mmsf/transport/errors.hpp"

namespace mmsf::transport {

struct HostPort {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  bool operator==(const HostPort&) const = default;
  auto operator<=>(const HostPort&) const = default;
};

// Parses "host:port". Throws Error.
HostPort parse_host_port(std::string_view text);

enum class AddressKind { kInproc, kTcp, kRelayed };

struct EndpointAddress {
  AddressKind kind = AddressKind::kInproc;
  std::string channel;
  HostPort target;             // tcp: listener; relayed: terminal listener
  std::vector<HostPort> hops;  // relayed only, in forwarding order

  static EndpointAddress inproc(std::string channel);
  static EndpointAddress tcp(std::string channel, HostPort target);
  static EndpointAddress relayed(std::string channel, std::vector<HostPort> hops, HostPort target);
};

struct StreamConfig {
  static constexpr std::size_t kDefaultChunkSize = 262144;
  static constexpr std::size_t kMinChunkSize = 4096;

  int streams = 1;
  std::size_t chunk_size = kDefaultChunkSize;
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds io_timeout{10000};

  // Throws Error when k < 1 or chunk_size is below the minimum.
  void validate() const;
};

// Called before each chunk is written; may block to pace the link.
class ChunkPacer {
 public:
  virtual ~ChunkPacer() = default;
  virtual void before_chunk(std::size_t chunk_len) = 0;
};

// One concurrent sender and one concurrent receiver per channel.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual const std::string& name() const = 0;
  virtual int streams() const = 0;

  void send_framed(std::span<const std::byte> frame) { send_framed(frame, nullptr); }
  virtual void send_framed(std::span<const std::byte> frame, ChunkPacer* pacer) = 0;

  // Next whole frame, checksum verified. nullopt once the peer closed the
  // channel in order. Throws IoError or ChecksumError.
  virtual std::optional<bytes::Buffer> recv_framed() = 0;

  // Orderly end of the sending direction.
  virtual void close_send() = 0;
  // Tears the channel down and wakes blocked callers.
  virtual void close() = 0;
};

// Throws ConnectError; for relayed addresses the message names the failing hop.
std::unique_ptr<Channel> open_channel(const EndpointAddress& address, const StreamConfig& config);

// Two connected in-memory endpoints; frames sent on either arrive on the other.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> inproc_pair(const std::string& name);

// Accepts tcp channels. Each channel arrives as k handshaken streams.
class Listener {
 public:
  // Port 0 picks an ephemeral port. An allowlist, when given, rejects other
  // channel names at handshake. Throws BindError.
  explicit Listener(HostPort bind = {}, std::optional<std::set<std::string>> allowlist = std::nullopt,
                    StreamConfig config = {});
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  HostPort address() const;
  std::uint16_t port() const;

  // Waits for the named channel to have all its streams. Throws ConnectError
  // on timeout or after stop().
  std::unique_ptr<Channel> accept(const std::string& channel, std::chrono::milliseconds timeout);

  // Handshake rejections seen so far, one message each.
  std::vector<std::string> rejected() const;

  void stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace mmsf::transport
