#include <cstring>
#include <fstream>
#include <iomanip>

#include "mmsf/bytes.hpp"
#include "mmsf/mml/payload.hpp"
#include "mmsf/solvers/solvers.hpp"

namespace mmsf::solvers {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot write snapshot '" + path.string() + "'");
  return out;
}

template <typename T>
void write_rows(std::ostream& out, int nx, int ny, const std::vector<T>& values) {
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (x) out << ',';
      out << values[static_cast<std::size_t>(y) * nx + x];
    }
    out << '\n';
  }
}

template <typename T>
void write_grid_binary(const std::filesystem::path& path, int nx, int ny, mml::PayloadKind kind,
                       const std::vector<T>& values) {
  bytes::Buffer buf;
  bytes::put_bytes(buf, bytes::as_bytes("MMGD"));
  bytes::put<std::uint32_t>(buf, static_cast<std::uint32_t>(nx));
  bytes::put<std::uint32_t>(buf, static_cast<std::uint32_t>(ny));
  bytes::put<std::uint8_t>(buf, static_cast<std::uint8_t>(kind));
  buf.resize(16, std::byte{0});
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_grid_binary(const std::filesystem::path& path, mml::PayloadKind kind, int& nx, int& ny) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read snapshot '" + path.string() + "'");
  std::array<std::byte, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!in || std::memcmp(header.data(), "MMGD", 4) != 0) throw Error("'" + path.string() + "' is not an MMGD snapshot");
  nx = static_cast<int>(bytes::get<std::uint32_t>(header, 4));
  ny = static_cast<int>(bytes::get<std::uint32_t>(header, 8));
  if (bytes::get<std::uint8_t>(header, 12) != static_cast<std::uint8_t>(kind)) {
    throw Error("snapshot '" + path.string() + "' holds a different grid kind");
  }
  std::vector<T> values(static_cast<std::size_t>(nx) * ny);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!in) throw Error("snapshot '" + path.string() + "' is truncated");
  return values;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const ScalarField& field) {
  auto out = open_out(path);
  out << std::setprecision(17);
  write_rows(out, field.nx, field.ny, field.values);
}

void write_csv(const std::filesystem::path& path, const GeometryGrid& grid) {
  auto out = open_out(path);
  write_rows(out, grid.nx, grid.ny, grid.codes);
}

void write_csv(const std::filesystem::path& path, const AgentSet& agents) {
  auto out = open_out(path);
  out << std::setprecision(17) << "x,y,r,state\n";
  for (const auto& a : agents.cells) {
    out << a.x << ',' << a.y << ',' << a.r << ','
        << (a.state == AgentState::kGrowing ? "growing" : "quiescent") << '\n';
  }
}

void write_binary(const std::filesystem::path& path, const ScalarField& field) {
  write_grid_binary(path, field.nx, field.ny, mml::PayloadKind::kF64Grid, field.values);
}

void write_binary(const std::filesystem::path& path, const GeometryGrid& grid) {
  write_grid_binary(path, grid.nx, grid.ny, mml::PayloadKind::kI64Grid, grid.codes);
}

ScalarField read_binary_field(const std::filesystem::path& path) {
  ScalarField f;
  f.values = read_grid_binary<double>(path, mml::PayloadKind::kF64Grid, f.nx, f.ny);
  return f;
}

GeometryGrid read_binary_geometry(const std::filesystem::path& path) {
  GeometryGrid g;
  g.codes = read_grid_binary<std::int64_t>(path, mml::PayloadKind::kI64Grid, g.nx, g.ny);
  return g;
}

}  // namespace mmsf::solvers
