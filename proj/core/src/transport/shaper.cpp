#include "mmsf/transport/shaper.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace mmsf::transport {
namespace {

using Clock = std::chrono::steady_clock;

class ShapedChannel final : public Channel {
 public:
  ShapedChannel(std::unique_ptr<Channel> inner, LinkShape shape) : inner_(std::move(inner)), shape_(shape) {}

  const std::string& name() const override { return inner_->name(); }
  int streams() const override { return inner_->streams(); }

  void send_framed(std::span<const std::byte> frame, ChunkPacer* outer) override {
    Pacer pacer(*this, outer);
    inner_->send_framed(frame, &pacer);
  }

  std::optional<bytes::Buffer> recv_framed() override { return inner_->recv_framed(); }
  void close_send() override { inner_->close_send(); }
  void close() override { inner_->close(); }

 private:
  class Pacer final : public ChunkPacer {
   public:
    Pacer(ShapedChannel& ch, ChunkPacer* outer) : ch_(ch), outer_(outer), start_(Clock::now()) {}

    void before_chunk(std::size_t len) override {
      if (outer_) outer_->before_chunk(len);
      auto& free_at = ch_.link_free_;
      auto entry = std::max(start_, free_at);
      if (ch_.shape_.bandwidth_bytes_per_s) {
        entry += to_duration(static_cast<double>(len) / *ch_.shape_.bandwidth_bytes_per_s);
      }
      free_at = entry;
      std::this_thread::sleep_until(entry + to_duration(ch_.shape_.one_way_delay_ms / 1000.0));
    }

   private:
    static Clock::duration to_duration(double seconds) {
      return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    }

    ShapedChannel& ch_;
    ChunkPacer* outer_;
    Clock::time_point start_;
  };

  std::unique_ptr<Channel> inner_;
  LinkShape shape_;
  Clock::time_point link_free_{};
};

}  // namespace

void LinkShape::validate() const {
  if (!(one_way_delay_ms >= 0.0) || !std::isfinite(one_way_delay_ms)) {
    throw Error("link delay must be a non-negative number of milliseconds");
  }
  if (bandwidth_bytes_per_s && !(*bandwidth_bytes_per_s > 0.0)) throw Error("link bandwidth must be positive");
}

std::unique_ptr<Channel> shape_link(std::unique_ptr<Channel> channel, LinkShape shape) {
  shape.validate();
  if (shape.one_way_delay_ms == 0.0 && !shape.bandwidth_bytes_per_s) return channel;
  return std::make_unique<ShapedChannel>(std::move(channel), shape);
}

}  // namespace mmsf::transport
