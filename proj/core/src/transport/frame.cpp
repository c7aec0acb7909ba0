#include "mmsf/transport/frame.hpp"

#include <cstring>

namespace mmsf::transport {

std::uint32_t conduit_hash(std::string_view conduit_id) { return bytes::fnv1a32(conduit_id); }

bytes::Buffer encode_frame(std::uint32_t hash, std::uint64_t iteration, std::uint8_t kind_tag,
                           std::span<const std::byte> payload) {
  bytes::Buffer out;
  out.reserve(kFrameOverhead + payload.size());
  bytes::put_bytes(out, bytes::as_bytes("MMSF"));
  bytes::put<std::uint8_t>(out, kFrameVersion);
  bytes::put<std::uint32_t>(out, hash);
  bytes::put<std::uint64_t>(out, iteration);
  bytes::put<std::uint8_t>(out, kind_tag);
  bytes::put<std::uint64_t>(out, payload.size());
  bytes::put_bytes(out, payload);
  bytes::put<std::uint64_t>(out, bytes::fnv1a64(payload));
  return out;
}

bytes::Buffer encode_frame(std::string_view conduit_id, std::uint64_t iteration, const mml::Payload& payload) {
  const auto body = payload.encode();
  return encode_frame(conduit_hash(conduit_id), iteration, static_cast<std::uint8_t>(payload.kind()), body);
}

FrameView decode_frame(std::span<const std::byte> frame) {
  if (frame.size() < kFrameOverhead || std::memcmp(frame.data(), "MMSF", 4) != 0) {
    throw IoError("malformed frame: bad magic or short frame (" + std::to_string(frame.size()) + " bytes)");
  }
  if (bytes::get<std::uint8_t>(frame, 4) != kFrameVersion) throw IoError("unsupported frame version");
  FrameView view;
  view.conduit_hash = bytes::get<std::uint32_t>(frame, 5);
  view.iteration = bytes::get<std::uint64_t>(frame, 9);
  view.kind_tag = bytes::get<std::uint8_t>(frame, 17);
  const auto len = bytes::get<std::uint64_t>(frame, 18);
  if (len != frame.size() - kFrameOverhead) {
    throw IoError("malformed frame: payload length " + std::to_string(len) + " does not match frame size");
  }
  view.payload = frame.subspan(kFrameHeaderSize, len);
  const auto checksum = bytes::get<std::uint64_t>(frame, kFrameHeaderSize + len);
  if (checksum != bytes::fnv1a64(view.payload)) throw ChecksumError("frame checksum mismatch");
  return view;
}

mml::Payload frame_payload(const FrameView& view) {
  return mml::Payload::decode(static_cast<mml::PayloadKind>(view.kind_tag), view.payload);
}

void encode_chunk_header(const ChunkHeader& h, std::span<std::byte, kChunkHeaderSize> out) {
  std::memcpy(out.data(), &h.frame_seq, 8);
  std::memcpy(out.data() + 8, &h.chunk_idx, 4);
  std::memcpy(out.data() + 12, &h.chunk_count, 4);
  std::memcpy(out.data() + 16, &h.chunk_len, 4);
}

ChunkHeader decode_chunk_header(std::span<const std::byte, kChunkHeaderSize> in) {
  ChunkHeader h;
  std::memcpy(&h.frame_seq, in.data(), 8);
  std::memcpy(&h.chunk_idx, in.data() + 8, 4);
  std::memcpy(&h.chunk_count, in.data() + 12, 4);
  std::memcpy(&h.chunk_len, in.data() + 16, 4);
  return h;
}

std::uint32_t chunk_count_for(std::size_t frame_len, std::size_t chunk_size) {
  if (frame_len == 0) return 1;
  return static_cast<std::uint32_t>((frame_len + chunk_size - 1) / chunk_size);
}

}  // namespace mmsf::transport
