#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

// Little-endian encoding helpers and FNV-1a hashing shared by the frame,
// chunk and snapshot formats.
namespace mmsf::bytes {

static_assert(std::endian::native == std::endian::little,
              "wire formats assume a little-endian host");

using Buffer = std::vector<std::byte>;

template <typename T>
void put(Buffer& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::byte> in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

inline void put_bytes(Buffer& out, std::span<const std::byte> data) {
  out.insert(out.end(), data.begin(), data.end());
}

inline std::span<const std::byte> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

constexpr std::uint64_t kFnv64Offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnv64Prime = 0x100000001b3ULL;
constexpr std::uint32_t kFnv32Offset = 0x811c9dc5U;
constexpr std::uint32_t kFnv32Prime = 0x01000193U;

inline std::uint64_t fnv1a64(std::span<const std::byte> data,
                             std::uint64_t seed = kFnv64Offset) {
  std::uint64_t h = seed;
  for (std::byte b : data) {
    h ^= static_cast<std::uint8_t>(b);
    h *= kFnv64Prime;
  }
  return h;
}

inline std::uint32_t fnv1a32(std::string_view text) {
  std::uint32_t h = kFnv32Offset;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnv32Prime;
  }
  return h;
}

}  // namespace mmsf::bytes
