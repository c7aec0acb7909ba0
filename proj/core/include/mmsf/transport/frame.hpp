#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "mmsf/bytes.hpp"
#include "mmsf/mml/payload.hpp"
#include "mmsf/transport/errors.hpp"

namespace mmsf::transport {

// Message frame, little-endian:
//   "MMSF" | u8 version | u32 conduit hash | u64 iteration | u8 kind tag |
//   u64 payload length | payload | u64 FNV-1a(payload)
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 4 + 1 + 4 + 8 + 1 + 8;
inline constexpr std::size_t kFrameOverhead = kFrameHeaderSize + 8;

struct FrameView {
  std::uint32_t conduit_hash = 0;
  std::uint64_t iteration = 0;
  std::uint8_t kind_tag = 0;
  std::span<const std::byte> payload;
};

// FNV-1a (32-bit) of the conduit id.
std::uint32_t conduit_hash(std::string_view conduit_id);

bytes::Buffer encode_frame(std::uint32_t conduit_hash, std::uint64_t iteration, std::uint8_t kind_tag,
                           std::span<const std::byte> payload);
bytes::Buffer encode_frame(std::string_view conduit_id, std::uint64_t iteration, const mml::Payload& payload);

// Validates structure and checksum. Throws IoError for a malformed frame and
// ChecksumError for a checksum mismatch. The view borrows from `frame`.
FrameView decode_frame(std::span<const std::byte> frame);

mml::Payload frame_payload(const FrameView& view);

// Chunk header preceding every chunk on a stream, little-endian:
//   u64 frame_seq | u32 chunk_idx | u32 chunk_count | u32 chunk_len
// chunk_count == 0 marks an orderly end of channel.
struct ChunkHeader {
  std::uint64_t frame_seq = 0;
  std::uint32_t chunk_idx = 0;
  std::uint32_t chunk_count = 0;
  std::uint32_t chunk_len = 0;

  bool end_of_channel() const { return chunk_count == 0; }
  bool operator==(const ChunkHeader&) const = default;
};

inline constexpr std::size_t kChunkHeaderSize = 20;

void encode_chunk_header(const ChunkHeader& header, std::span<std::byte, kChunkHeaderSize> out);
ChunkHeader decode_chunk_header(std::span<const std::byte, kChunkHeaderSize> in);

// ceil(len / chunk_size), at least one.
std::uint32_t chunk_count_for(std::size_t frame_len, std::size_t chunk_size);

}  // namespace mmsf::transport
