#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mmsf/solvers/solvers.hpp"

// Reference implementations shared by the solver unit tests and the
// acceptance binary.
namespace mmsf::test {

using namespace mmsf::solvers;

inline AgentSet load_agents(const std::filesystem::path& path, double ex, double ey) {
  std::ifstream in(path);
  if (!in) throw mmsf::Error("cannot open " + path.string());
  AgentSet set{ex, ey, {}};
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string x, y, r, state;
    std::getline(ss, x, ',');
    std::getline(ss, y, ',');
    std::getline(ss, r, ',');
    std::getline(ss, state, ',');
    set.cells.push_back({std::strtod(x.c_str(), nullptr), std::strtod(y.c_str(), nullptr), std::strtod(r.c_str(), nullptr),
                         state == "growing" ? AgentState::kGrowing : AgentState::kQuiescent});
  }
  return set;
}

inline GeometryGrid load_geometry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw mmsf::Error("cannot open " + path.string());
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(line);
  }
  auto g = GeometryGrid::fluid(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < g.ny; ++y) {
    for (int x = 0; x < g.nx; ++x) {
      const char c = rows[y][x];
      g.at(x, y) = static_cast<std::int64_t>(c == 'S' ? Occupancy::kStent : c == 'T' ? Occupancy::kTissue : Occupancy::kFluid);
    }
  }
  return g;
}

// Force-driven channel: x periodic, wall rows at y=0 and y=ny-1, H = ny-2.
inline LatticeGrid channel(int h, double tau, double g) {
  auto grid = LatticeGrid::uniform(4, h + 2, tau);
  grid.force = {g, 0.0};
  grid.periodic_y = false;
  for (int x = 0; x < grid.nx; ++x) {
    grid.flags[grid.index(x, 0)] = CellFlag::kWall;
    grid.flags[grid.index(x, h + 1)] = CellFlag::kWall;
  }
  return grid;
}

inline void run_to_steady(LatticeGrid& grid, double tol = 1e-10) {
  double last = 0.0;
  for (int step = 0; step < 400000; ++step) {
    lbm_step(grid);
    if (step % 500 == 0) {
      const double u = grid.velocity(0, grid.ny / 2)[0];
      if (step > 0 && std::abs(u - last) <= tol * std::abs(u)) return;
      last = u;
    }
  }
  throw mmsf::Error("channel did not reach steady state");
}

// Straight-line re-statement of the agent rule: one draw per agent for the
// growth decision, a second only when it divides.
inline AgentSet smc_oracle(const AgentSet& in, const ScalarField& wss, const ScalarField& drug, const SmcParams& p) {
  std::mt19937_64 rng(p.seed);
  auto draw = [&] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
  auto field_at = [](const ScalarField& f, double x, double y) {
    int i = static_cast<int>(std::floor(x / f.dx)), j = static_cast<int>(std::floor(y / f.dx));
    i = i < 0 ? 0 : (i >= f.nx ? f.nx - 1 : i);
    j = j < 0 ? 0 : (j >= f.ny ? f.ny - 1 : j);
    return f.values[static_cast<std::size_t>(j) * f.nx + i];
  };
  auto fold = [](double v, double e) {
    v = v < 0 ? -v : v;
    v = v > e ? 2 * e - v : v;
    return std::min(std::max(v, 0.0), e);
  };
  auto clamp = [&](Agent& a) {
    a.x = fold(a.x, in.extent_x);
    a.y = fold(a.y, in.extent_y);
  };
  std::vector<Agent> first, extra;
  bool any = false;
  const double rc = p.r_div / std::sqrt(2.0);
  for (Agent a : in.cells) {
    double pw = 1.0 - field_at(wss, a.x, a.y) / p.wss_max;
    double pc = 1.0 - field_at(drug, a.x, a.y) / p.c_max;
    if (pw < 0) pw = 0;
    if (pc < 0) pc = 0;
    if (!(draw() < pw * pc)) {
      a.state = AgentState::kQuiescent;
      first.push_back(a);
      continue;
    }
    any = true;
    a.r += p.growth;
    a.state = AgentState::kGrowing;
    if (a.r >= p.r_div) {
      const double th = 2.0 * std::numbers::pi * draw();
      Agent b{a.x - rc * std::cos(th), a.y - rc * std::sin(th), rc, AgentState::kGrowing};
      a = Agent{a.x + rc * std::cos(th), a.y + rc * std::sin(th), rc, AgentState::kGrowing};
      clamp(a);
      clamp(b);
      extra.push_back(b);
    }
    first.push_back(a);
  }
  AgentSet out{in.extent_x, in.extent_y, first};
  out.cells.insert(out.cells.end(), extra.begin(), extra.end());
  if (!any) return out;
  for (int sweep = 0; sweep < p.max_relax_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
      for (std::size_t j = i + 1; j < out.cells.size(); ++j) {
        Agent& a = out.cells[i];
        Agent& b = out.cells[j];
        const double d = std::hypot(b.x - a.x, b.y - a.y);
        const double ov = a.r + b.r - d;
        if (ov <= 0.01 * std::min(a.r, b.r)) continue;
        const double ux = d > 0 ? (b.x - a.x) / d : 1.0, uy = d > 0 ? (b.y - a.y) / d : 0.0;
        a.x -= ux * ov / 2;
        a.y -= uy * ov / 2;
        b.x += ux * ov / 2;
        b.y += uy * ov / 2;
        clamp(a);
        clamp(b);
        moved = true;
      }
    }
    if (!moved) break;
  }
  return out;
}

inline constexpr double kAgentDx = 1e-5;

// smc-50.csv on a 40x24 grid with a wss ramp along x and a drug ramp along y.
struct SmcFixture {
  AgentSet agents;
  ScalarField wss = ScalarField::zeros(40, 24, kAgentDx);
  ScalarField drug = ScalarField::zeros(40, 24, kAgentDx);
  SmcParams params{2e-5, 0.5, 0.2 * kAgentDx, 1.0 * kAgentDx, 42, 200};

  explicit SmcFixture(const std::filesystem::path& fixtures)
      : agents(load_agents(fixtures / "smc-50.csv", 40 * kAgentDx, 24 * kAgentDx)) {
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 40; ++x) {
        wss.at(x, y) = 2e-5 * x / 40.0;
        drug.at(x, y) = 0.5 * y / 48.0;
      }
    }
  }
};

}  // namespace mmsf::test
