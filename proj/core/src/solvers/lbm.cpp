#include <cmath>

#include "mmsf/solvers/solvers.hpp"

namespace mmsf::solvers {

double equilibrium(int i, double rho, double ux, double uy) {
  const double cu = kCx[i] * ux + kCy[i] * uy;
  const double uu = ux * ux + uy * uy;
  return kWeight[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * uu);
}

LatticeGrid LatticeGrid::uniform(int nx, int ny, double tau) {
  if (!(tau > 0.5)) throw StabilityError("BGK relaxation needs tau > 0.5, got " + std::to_string(tau));
  if (nx <= 0 || ny <= 0) throw Error("lattice dimensions must be positive");
  LatticeGrid g;
  g.nx = nx;
  g.ny = ny;
  g.tau = tau;
  const auto cells = static_cast<std::size_t>(nx) * ny;
  g.flags.assign(cells, CellFlag::kFluid);
  g.boundary_density.assign(cells, 1.0);
  g.f.resize(cells * kQ);
  for (std::size_t c = 0; c < cells; ++c) {
    for (int i = 0; i < kQ; ++i) g.f[c * kQ + i] = kWeight[i];
  }
  return g;
}

double LatticeGrid::density(int x, int y) const {
  const double* fc = &f[index(x, y) * kQ];
  double rho = 0.0;
  for (int i = 0; i < kQ; ++i) rho += fc[i];
  return rho;
}

std::array<double, 2> LatticeGrid::velocity(int x, int y) const {
  const double* fc = &f[index(x, y) * kQ];
  double rho = 0.0, mx = 0.0, my = 0.0;
  for (int i = 0; i < kQ; ++i) {
    rho += fc[i];
    mx += kCx[i] * fc[i];
    my += kCy[i] * fc[i];
  }
  return {(mx + 0.5 * rho * force[0]) / rho, (my + 0.5 * rho * force[1]) / rho};
}

double LatticeGrid::total_mass() const {
  double m = 0.0;
  for (std::size_t c = 0; c < flags.size(); ++c) {
    if (is_wall(c)) continue;
    for (int i = 0; i < kQ; ++i) m += f[c * kQ + i];
  }
  return m;
}

std::array<double, 2> LatticeGrid::total_momentum() const {
  std::array<double, 2> m{0.0, 0.0};
  for (std::size_t c = 0; c < flags.size(); ++c) {
    if (is_wall(c)) continue;
    for (int i = 0; i < kQ; ++i) {
      m[0] += kCx[i] * f[c * kQ + i];
      m[1] += kCy[i] * f[c * kQ + i];
    }
  }
  return m;
}

std::size_t LatticeGrid::fluid_cells() const {
  std::size_t n = 0;
  for (auto flag : flags) n += flag == CellFlag::kFluid;
  return n;
}

void LatticeGrid::set_equilibrium(int x, int y, double rho, double ux, double uy) {
  double* fc = &f[index(x, y) * kQ];
  for (int i = 0; i < kQ; ++i) fc[i] = equilibrium(i, rho, ux, uy);
}

void lbm_step(LatticeGrid& g) {
  const int nx = g.nx, ny = g.ny;
  const double omega = 1.0 / g.tau;
  const double gx = g.force[0], gy = g.force[1];
  const double guo = 1.0 - 0.5 * omega;
  std::vector<double> post(g.f.size());

  // Collision.
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t c = g.index(x, y);
      if (g.is_wall(c)) continue;
      const double* fc = &g.f[c * kQ];
      double* pc = &post[c * kQ];
      double rho = 0.0, mx = 0.0, my = 0.0;
      for (int i = 0; i < kQ; ++i) {
        rho += fc[i];
        mx += kCx[i] * fc[i];
        my += kCy[i] * fc[i];
      }
      if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw InstabilityError("non-positive or non-finite density at (" + std::to_string(x) + "," +
                               std::to_string(y) + ")");
      }
      if (g.flags[c] == CellFlag::kInlet || g.flags[c] == CellFlag::kOutlet) {
        // Pressure boundary: equilibrium at the prescribed density.
        const double rb = g.boundary_density[c];
        const double ux = mx / rho, uy = my / rho;
        for (int i = 0; i < kQ; ++i) pc[i] = equilibrium(i, rb, ux, uy);
        continue;
      }
      const double ux = (mx + 0.5 * rho * gx) / rho;
      const double uy = (my + 0.5 * rho * gy) / rho;
      for (int i = 0; i < kQ; ++i) {
        const double cu = kCx[i] * ux + kCy[i] * uy;
        const double forcing =
            guo * kWeight[i] * rho *
            (3.0 * ((kCx[i] - ux) * gx + (kCy[i] - uy) * gy) + 9.0 * cu * (kCx[i] * gx + kCy[i] * gy));
        pc[i] = fc[i] - omega * (fc[i] - equilibrium(i, rho, ux, uy)) + forcing;
      }
    }
  }

  // Streaming (pull) with half-way bounce-back.
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t c = g.index(x, y);
      if (g.is_wall(c)) continue;
      double* fc = &g.f[c * kQ];
      for (int i = 0; i < kQ; ++i) {
        int sx = x - kCx[i], sy = y - kCy[i];
        bool inside = true;
        if (sx < 0 || sx >= nx) {
          if (g.periodic_x) sx = (sx + nx) % nx;
          else inside = false;
        }
        if (sy < 0 || sy >= ny) {
          if (g.periodic_y) sy = (sy + ny) % ny;
          else inside = false;
        }
        const std::size_t src = inside ? g.index(sx, sy) : c;
        if (inside && !g.is_wall(src)) {
          fc[i] = post[src * kQ + i];
        } else {
          fc[i] = post[c * kQ + kOpposite[i]];
        }
      }
      for (int i = 0; i < kQ; ++i) {
        if (!std::isfinite(fc[i])) {
          throw InstabilityError("non-finite population at (" + std::to_string(x) + "," + std::to_string(y) + ")");
        }
      }
    }
  }
}

}  // namespace mmsf::solvers
