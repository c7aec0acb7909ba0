#include "mmsf/mml/payload.hpp"

#include <array>
#include <utility>

#include "mmsf/bytes.hpp"

namespace mmsf::mml {

namespace {

constexpr std::array<std::pair<PayloadKind, std::string_view>, 5> kKindNames{{
    {PayloadKind::kI64Array, "i64-array"},
    {PayloadKind::kF64Array, "f64-array"},
    {PayloadKind::kI64Grid, "i64-grid"},
    {PayloadKind::kF64Grid, "f64-grid"},
    {PayloadKind::kOpaqueBytes, "opaque-bytes"},
}};

void check_grid(std::int64_t nx, std::int64_t ny, std::size_t n) {
  if (nx < 0 || ny < 0 || static_cast<std::size_t>(nx * ny) != n) {
    throw TypeError("grid dims " + std::to_string(nx) + "x" + std::to_string(ny) +
                    " do not match " + std::to_string(n) + " values");
  }
}

template <typename T>
std::vector<T> decode_elements(std::span<const std::byte> body, std::size_t offset) {
  if ((body.size() - offset) % sizeof(T) != 0) {
    throw TypeError("payload body length is not a multiple of the element size");
  }
  std::vector<T> out((body.size() - offset) / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), body.data() + offset, out.size() * sizeof(T));
  return out;
}

}  // namespace

std::string_view to_string(PayloadKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PayloadKind> payload_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

bool is_grid(PayloadKind kind) {
  return kind == PayloadKind::kI64Grid || kind == PayloadKind::kF64Grid;
}

std::string to_string(const PayloadType& type) {
  std::string s(to_string(type.kind));
  for (std::size_t i = 0; i < type.dims.size(); ++i) {
    s += (i == 0 ? "[" : "x") + std::to_string(type.dims[i]);
  }
  if (!type.dims.empty()) s += "]";
  return s;
}

bool compatible(const PayloadType& produced, const PayloadType& consumed) {
  if (produced.kind != consumed.kind) return false;
  if (produced.dims.empty() || consumed.dims.empty()) return true;
  return produced.dims == consumed.dims;
}

Payload Payload::i64_array(std::vector<std::int64_t> values) {
  Payload p;
  p.kind_ = PayloadKind::kI64Array;
  p.data_ = std::move(values);
  return p;
}

Payload Payload::f64_array(std::vector<double> values) {
  Payload p;
  p.kind_ = PayloadKind::kF64Array;
  p.data_ = std::move(values);
  return p;
}

Payload Payload::i64_grid(std::int64_t nx, std::int64_t ny, std::vector<std::int64_t> values) {
  check_grid(nx, ny, values.size());
  Payload p;
  p.kind_ = PayloadKind::kI64Grid;
  p.dims_ = {nx, ny};
  p.data_ = std::move(values);
  return p;
}

Payload Payload::f64_grid(std::int64_t nx, std::int64_t ny, std::vector<double> values) {
  check_grid(nx, ny, values.size());
  Payload p;
  p.kind_ = PayloadKind::kF64Grid;
  p.dims_ = {nx, ny};
  p.data_ = std::move(values);
  return p;
}

Payload Payload::opaque(std::vector<std::byte> bytes) {
  Payload p;
  p.kind_ = PayloadKind::kOpaqueBytes;
  p.data_ = std::move(bytes);
  return p;
}

const std::vector<std::int64_t>& Payload::ints() const {
  if (auto* v = std::get_if<std::vector<std::int64_t>>(&data_)) return *v;
  throw TypeError("payload of kind " + std::string(to_string(kind_)) + " does not hold i64 values");
}

const std::vector<double>& Payload::doubles() const {
  if (auto* v = std::get_if<std::vector<double>>(&data_)) return *v;
  throw TypeError("payload of kind " + std::string(to_string(kind_)) + " does not hold f64 values");
}

const std::vector<std::byte>& Payload::bytes() const {
  if (auto* v = std::get_if<std::vector<std::byte>>(&data_)) return *v;
  throw TypeError("payload of kind " + std::string(to_string(kind_)) + " does not hold raw bytes");
}

std::size_t Payload::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::vector<std::byte> Payload::encode() const {
  bytes::Buffer out;
  if (is_grid(kind_)) {
    bytes::put<std::uint32_t>(out, static_cast<std::uint32_t>(dims_.size()));
    for (auto d : dims_) bytes::put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  }
  std::visit(
      [&out](const auto& v) {
        const auto* p = reinterpret_cast<const std::byte*>(v.data());
        out.insert(out.end(), p, p + v.size() * sizeof(v[0]));
      },
      data_);
  return out;
}

Payload Payload::decode(PayloadKind kind, std::span<const std::byte> body) {
  switch (kind) {
    case PayloadKind::kI64Array:
      return i64_array(decode_elements<std::int64_t>(body, 0));
    case PayloadKind::kF64Array:
      return f64_array(decode_elements<double>(body, 0));
    case PayloadKind::kOpaqueBytes:
      return opaque({body.begin(), body.end()});
    case PayloadKind::kI64Grid:
    case PayloadKind::kF64Grid: {
      if (body.size() < 4) throw TypeError("grid payload missing its dimension header");
      auto ndims = bytes::get<std::uint32_t>(body, 0);
      std::size_t offset = 4 + std::size_t{ndims} * 8;
      if (ndims != 2 || body.size() < offset) throw TypeError("grid payload must be two-dimensional");
      auto nx = static_cast<std::int64_t>(bytes::get<std::uint64_t>(body, 4));
      auto ny = static_cast<std::int64_t>(bytes::get<std::uint64_t>(body, 12));
      if (kind == PayloadKind::kI64Grid) return i64_grid(nx, ny, decode_elements<std::int64_t>(body, offset));
      return f64_grid(nx, ny, decode_elements<double>(body, offset));
    }
  }
  throw TypeError("unknown payload kind tag " + std::to_string(static_cast<int>(kind)));
}

}  // namespace mmsf::mml
