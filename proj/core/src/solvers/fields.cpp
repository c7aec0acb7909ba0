#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmsf/solvers/solvers.hpp"

namespace mmsf::solvers {

ScalarField ScalarField::zeros(int nx, int ny, double dx, BoundaryCondition bc) {
  ScalarField s;
  s.nx = nx;
  s.ny = ny;
  s.dx = dx;
  s.bc = bc;
  s.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  return s;
}

double ScalarField::sample(double px, double py) const {
  int x = std::clamp(static_cast<int>(std::floor(px / dx)), 0, nx - 1);
  int y = std::clamp(static_cast<int>(std::floor(py / dx)), 0, ny - 1);
  return at(x, y);
}

double ScalarField::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

GeometryGrid GeometryGrid::fluid(int nx, int ny) {
  GeometryGrid g;
  g.nx = nx;
  g.ny = ny;
  g.codes.assign(static_cast<std::size_t>(nx) * ny, static_cast<std::int64_t>(Occupancy::kFluid));
  return g;
}

std::size_t GeometryGrid::count(Occupancy code) const {
  return static_cast<std::size_t>(std::count(codes.begin(), codes.end(), static_cast<std::int64_t>(code)));
}

ScalarField wall_shear_stress(const LatticeGrid& grid) {
  const int nx = grid.nx, ny = grid.ny;
  const double nu = grid.viscosity();
  auto out = ScalarField::zeros(nx, ny, 1.0);
  std::vector<int> wall_hits(out.values.size(), 0);

  auto neighbor = [&](int x, int y, int dx, int dy, int& ox, int& oy) {
    ox = x + dx;
    oy = y + dy;
    if (ox < 0 || ox >= nx) {
      if (!grid.periodic_x) return false;
      ox = (ox + nx) % nx;
    }
    if (oy < 0 || oy >= ny) {
      if (!grid.periodic_y) return false;
      oy = (oy + ny) % ny;
    }
    return true;
  };

  constexpr std::array<std::array<int, 2>, 4> kAxes{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (grid.flags[grid.index(x, y)] != CellFlag::kFluid) continue;
      double total = 0.0;
      int walls = 0;
      for (auto [wx, wy] : kAxes) {
        int ax, ay;
        bool in_domain = neighbor(x, y, wx, wy, ax, ay);
        if (in_domain && !grid.is_wall(grid.index(ax, ay))) continue;
        // Normal points from the wall into the fluid; tangent is the other axis.
        const int nx_dir = -wx, ny_dir = -wy;
        const int tx = ny_dir != 0 ? 1 : 0, ty = nx_dir != 0 ? 1 : 0;
        auto u1 = grid.velocity(x, y);
        const double ut1 = u1[0] * tx + u1[1] * ty;
        double dudn = 2.0 * ut1;  // wall sits half a cell away
        int bx, by;
        if (neighbor(x, y, nx_dir, ny_dir, bx, by) && grid.flags[grid.index(bx, by)] == CellFlag::kFluid) {
          auto u2 = grid.velocity(bx, by);
          const double ut2 = u2[0] * tx + u2[1] * ty;
          dudn = (9.0 * ut1 - ut2) / 3.0;
        }
        total += std::abs(grid.density(x, y) * nu * dudn);
        ++walls;
        if (in_domain) {
          const auto w = grid.index(ax, ay);
          out.values[w] += std::abs(grid.density(x, y) * nu * dudn);
          ++wall_hits[w];
        }
      }
      if (walls > 0) out.at(x, y) = total / walls;
    }
  }
  for (std::size_t c = 0; c < out.values.size(); ++c) {
    if (wall_hits[c] > 0) out.values[c] /= wall_hits[c];
  }
  return out;
}

ScalarField diffusion_step(const ScalarField& field, double diffusivity, double dt) {
  if (diffusivity < 0.0 || dt < 0.0) throw StabilityError("diffusivity and dt must be non-negative");
  const double limit = field.dx * field.dx / (4.0 * diffusivity);
  if (diffusivity > 0.0 && dt > limit * (1.0 + 1e-12)) {
    throw StabilityError("FTCS step dt=" + std::to_string(dt) + " exceeds dx^2/(4D)=" + std::to_string(limit));
  }
  const double lambda = diffusivity * dt / (field.dx * field.dx);
  ScalarField out = field;
  const int nx = field.nx, ny = field.ny;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const bool edge = x == 0 || y == 0 || x == nx - 1 || y == ny - 1;
      if (edge && field.bc == BoundaryCondition::kFixed) continue;
      const double c = field.at(x, y);
      // Mirrored ghosts give zero flux through the outer faces.
      const double west = x > 0 ? field.at(x - 1, y) : c;
      const double east = x < nx - 1 ? field.at(x + 1, y) : c;
      const double south = y > 0 ? field.at(x, y - 1) : c;
      const double north = y < ny - 1 ? field.at(x, y + 1) : c;
      out.at(x, y) = c + lambda * (west + east + south + north - 4.0 * c);
    }
  }
  return out;
}

GeometryGrid thrombus_fill(const GeometryGrid& geometry) {
  GeometryGrid out = geometry;
  auto solid = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= geometry.nx || y >= geometry.ny) return 0;
    auto code = geometry.at(x, y);
    return code == static_cast<std::int64_t>(Occupancy::kStent) ||
                   code == static_cast<std::int64_t>(Occupancy::kTissue)
               ? 1
               : 0;
  };
  for (int y = 0; y < geometry.ny; ++y) {
    for (int x = 0; x < geometry.nx; ++x) {
      if (geometry.at(x, y) != static_cast<std::int64_t>(Occupancy::kFluid)) continue;
      int n = solid(x - 1, y) + solid(x + 1, y) + solid(x, y - 1) + solid(x, y + 1);
      if (n >= 2) out.at(x, y) = static_cast<std::int64_t>(Occupancy::kThrombus);
    }
  }
  return out;
}

ScalarField geometry_to_source_field(const GeometryGrid& geometry, double dx) {
  auto field = ScalarField::zeros(geometry.nx, geometry.ny, dx);
  for (std::size_t c = 0; c < geometry.codes.size(); ++c) {
    if (geometry.codes[c] == static_cast<std::int64_t>(Occupancy::kStent)) field.values[c] = 1.0;
  }
  return field;
}

double pressure_at(const PressureModel& model, double t, std::size_t outlet) {
  if (outlet >= kOutlets) {
    throw IndexError("outlet index " + std::to_string(outlet) + " out of range [0," + std::to_string(kOutlets) + ")");
  }
  const double beats = t * model.heart_rate / 60.0;
  const double phase = beats - std::floor(beats);
  return (model.p_mean + model.amplitude * std::sin(2.0 * std::numbers::pi * phase)) * model.resistance[outlet];
}

}  // namespace mmsf::solvers
