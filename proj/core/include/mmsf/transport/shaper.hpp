#pragma once

#include <memory>
#include <optional>

#include "mmsf/transport/channel.hpp"

namespace mmsf::transport {

// Latency/bandwidth emulation for test and demo harnesses.
struct LinkShape {
  double one_way_delay_ms = 0.0;
  std::optional<double> bandwidth_bytes_per_s;

  // Throws Error for negative delay or non-positive bandwidth.
  void validate() const;
};

// Wraps a channel so that each outgoing chunk is released one_way_delay after
// it entered the link, with chunks serialized at the bandwidth cap. The
// sender blocks until its last chunk is released. Receiving is unchanged.
std::unique_ptr<Channel> shape_link(std::unique_ptr<Channel> channel, LinkShape shape);

}  // namespace mmsf::transport
