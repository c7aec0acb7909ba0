#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/transport/channel.hpp"

namespace mmsf::transport {

// Channel name -> next hop (another relay or the terminal listener).
using RelayRoute = std::map<std::string, HostPort>;

// One "<channel-name> <next-host>:<port>" per line; '#' starts a comment.
// Throws Error with the offending line number.
RelayRoute parse_relay_config(std::string_view text);
RelayRoute load_relay_config(const std::filesystem::path& path);

struct RelayOptions {
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds handshake_timeout{5000};
};

// Forwards the streams of registered channels byte-for-byte. The routing
// table is fixed at construction.
class Relay {
 public:
  // Throws BindError.
  Relay(HostPort listen, RelayRoute route, RelayOptions options = {});
  ~Relay();
  Relay(const Relay&) = delete;
  Relay& operator=(const Relay&) = delete;

  HostPort address() const;
  std::uint16_t port() const;
  const RelayRoute& route() const;

  // Bytes forwarded towards the next hop, summed over streams. Zero for
  // unknown channels.
  std::uint64_t bytes_forwarded(const std::string& channel) const;
  // Bytes forwarded back towards the connecting side.
  std::uint64_t bytes_returned(const std::string& channel) const;

  // RouteError / unreachable-hop messages, in order of occurrence.
  std::vector<std::string> errors() const;

  // Abrupt failure: every connection is reset and the listener closed.
  void kill();
  // Orderly shutdown.
  void stop();

 private:
  struct State;
  std::shared_ptr<State> state_;
};

std::unique_ptr<Relay> run_relay(HostPort listen, RelayRoute route, RelayOptions options = {});

}  // namespace mmsf::transport
