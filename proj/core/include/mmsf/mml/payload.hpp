#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mmsf/error.hpp"

namespace mmsf::mml {

// Wire tags double as the frame's payload-kind byte; never renumber.
enum class PayloadKind : std::uint8_t {
  kI64Array = 1,
  kF64Array = 2,
  kI64Grid = 3,
  kF64Grid = 4,
  kOpaqueBytes = 5,
};

std::string_view to_string(PayloadKind kind);
std::optional<PayloadKind> payload_kind_from_string(std::string_view text);
bool is_grid(PayloadKind kind);

// A payload kind plus grid dimensions (empty for non-grid kinds, or for grids
// whose extent is left open).
struct PayloadType {
  PayloadKind kind = PayloadKind::kOpaqueBytes;
  std::vector<std::int64_t> dims;

  bool operator==(const PayloadType&) const = default;
};

std::string to_string(const PayloadType& type);

// Two declared types are compatible when kinds agree and, if both sides pin
// grid dimensions, the dimensions agree too.
bool compatible(const PayloadType& produced, const PayloadType& consumed);

class TypeError : public Error {
 public:
  using Error::Error;
};

// Typed array carried by a message. Grids store row-major data with
// dims = {nx, ny} (x fastest).
class Payload {
 public:
  using Storage = std::variant<std::vector<std::int64_t>, std::vector<double>,
                               std::vector<std::byte>>;

  Payload() = default;

  static Payload i64_array(std::vector<std::int64_t> values);
  static Payload f64_array(std::vector<double> values);
  static Payload i64_grid(std::int64_t nx, std::int64_t ny, std::vector<std::int64_t> values);
  static Payload f64_grid(std::int64_t nx, std::int64_t ny, std::vector<double> values);
  static Payload opaque(std::vector<std::byte> bytes);

  PayloadKind kind() const { return kind_; }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  PayloadType type() const { return {kind_, dims_}; }

  // Throw TypeError when the payload holds a different element type.
  const std::vector<std::int64_t>& ints() const;
  const std::vector<double>& doubles() const;
  const std::vector<std::byte>& bytes() const;

  std::size_t element_count() const;

  // Little-endian body as carried inside a message frame. Grid bodies start
  // with u32 ndims followed by one u64 per dimension.
  std::vector<std::byte> encode() const;
  static Payload decode(PayloadKind kind, std::span<const std::byte> body);

  bool operator==(const Payload&) const = default;

 private:
  PayloadKind kind_ = PayloadKind::kOpaqueBytes;
  std::vector<std::int64_t> dims_;
  Storage data_ = std::vector<std::byte>{};
};

}  // namespace mmsf::mml
