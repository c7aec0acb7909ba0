#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mmsf/solvers/solvers.hpp"

namespace mmsf::solvers {

double unit_draw(std::uint64_t raw) { return static_cast<double>(raw >> 11) * 0x1.0p-53; }

namespace {

// Mirror back across the domain edge, so cells pushed against a wall keep
// distinct positions and can slide past each other.
double reflect(double v, double extent) {
  if (v < 0.0) v = -v;
  if (v > extent) v = 2.0 * extent - v;
  return std::clamp(v, 0.0, extent);
}

void clamp_into(Agent& a, double ex, double ey) {
  a.x = reflect(a.x, ex);
  a.y = reflect(a.y, ey);
}

void relax_overlaps(AgentSet& set, int max_sweeps) {
  auto& cells = set.cells;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (std::size_t j = i + 1; j < cells.size(); ++j) {
        auto& a = cells[i];
        auto& b = cells[j];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double d = std::hypot(dx, dy);
        const double overlap = a.r + b.r - d;
        if (overlap <= 0.01 * std::min(a.r, b.r)) continue;
        const double ux = d > 0.0 ? dx / d : 1.0;
        const double uy = d > 0.0 ? dy / d : 0.0;
        const double half = 0.5 * overlap;
        a.x -= ux * half;
        a.y -= uy * half;
        b.x += ux * half;
        b.y += uy * half;
        clamp_into(a, set.extent_x, set.extent_y);
        clamp_into(b, set.extent_x, set.extent_y);
        moved = true;
      }
    }
    if (!moved) return;
  }
}

}  // namespace

AgentSet smc_step(const AgentSet& agents, const ScalarField& wss, const ScalarField& drug,
                  const SmcParams& params) {
  std::mt19937_64 rng(params.seed);
  AgentSet out = agents;
  std::vector<Agent> daughters;
  bool changed = false;
  const double child_r = params.r_div / std::numbers::sqrt2;

  for (auto& cell : out.cells) {
    const double w = wss.sample(cell.x, cell.y);
    const double c = drug.sample(cell.x, cell.y);
    const double p = std::max(0.0, 1.0 - w / params.wss_max) * std::max(0.0, 1.0 - c / params.c_max);
    const bool grows = unit_draw(rng()) < p;
    if (!grows) {
      cell.state = AgentState::kQuiescent;
      continue;
    }
    changed = true;
    cell.r += params.growth;
    cell.state = AgentState::kGrowing;
    if (cell.r < params.r_div) continue;
    const double theta = 2.0 * std::numbers::pi * unit_draw(rng());
    const double ox = child_r * std::cos(theta), oy = child_r * std::sin(theta);
    Agent second{cell.x - ox, cell.y - oy, child_r, AgentState::kGrowing};
    cell = Agent{cell.x + ox, cell.y + oy, child_r, AgentState::kGrowing};
    clamp_into(cell, out.extent_x, out.extent_y);
    clamp_into(second, out.extent_x, out.extent_y);
    daughters.push_back(second);
  }
  out.cells.insert(out.cells.end(), daughters.begin(), daughters.end());
  if (changed) relax_overlaps(out, params.max_relax_sweeps);
  return out;
}

GeometryGrid agents_to_grid(const AgentSet& agents, double dx, int nx, int ny, const GeometryGrid* stent_mask) {
  auto grid = GeometryGrid::fluid(nx, ny);
  for (const auto& a : agents.cells) {
    // Only voxels whose centers can fall inside the disc.
    const int x0 = std::max(0, static_cast<int>(std::floor((a.x - a.r) / dx)));
    const int x1 = std::min(nx - 1, static_cast<int>(std::ceil((a.x + a.r) / dx)));
    const int y0 = std::max(0, static_cast<int>(std::floor((a.y - a.r) / dx)));
    const int y1 = std::min(ny - 1, static_cast<int>(std::ceil((a.y + a.r) / dx)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double cx = (x + 0.5) * dx - a.x, cy = (y + 0.5) * dx - a.y;
        if (cx * cx + cy * cy <= a.r * a.r) grid.at(x, y) = static_cast<std::int64_t>(Occupancy::kTissue);
      }
    }
  }
  if (stent_mask) {
    for (std::size_t c = 0; c < grid.codes.size() && c < stent_mask->codes.size(); ++c) {
      if (stent_mask->codes[c] == static_cast<std::int64_t>(Occupancy::kStent)) grid.codes[c] = stent_mask->codes[c];
    }
  }
  return grid;
}

namespace {

constexpr double kNanometer = 1e-9;

std::int64_t to_nm(double meters) { return std::llround(meters / kNanometer); }
double from_nm(std::int64_t nm) { return static_cast<double>(nm) * kNanometer; }

}  // namespace

std::vector<std::int64_t> encode_agent_list(const AgentList& list) {
  std::vector<std::int64_t> out;
  out.reserve(5 + list.agents.cells.size() * 4 + list.stent_cells.size());
  out.push_back(list.nx);
  out.push_back(list.ny);
  out.push_back(to_nm(list.dx));
  out.push_back(static_cast<std::int64_t>(list.agents.cells.size()));
  for (const auto& a : list.agents.cells) {
    out.push_back(to_nm(a.x));
    out.push_back(to_nm(a.y));
    out.push_back(to_nm(a.r));
    out.push_back(static_cast<std::int64_t>(a.state));
  }
  out.push_back(static_cast<std::int64_t>(list.stent_cells.size()));
  out.insert(out.end(), list.stent_cells.begin(), list.stent_cells.end());
  return out;
}

AgentList decode_agent_list(std::span<const std::int64_t> v) {
  auto fail = [] { throw Error("malformed agent list payload"); };
  if (v.size() < 5) fail();
  AgentList list;
  list.nx = static_cast<int>(v[0]);
  list.ny = static_cast<int>(v[1]);
  list.dx = from_nm(v[2]);
  if (list.nx <= 0 || list.ny <= 0 || v[2] <= 0) fail();
  list.agents.extent_x = list.nx * list.dx;
  list.agents.extent_y = list.ny * list.dx;
  const auto n = static_cast<std::size_t>(v[3]);
  if (v[3] < 0 || v.size() < 5 + 4 * n) fail();
  for (std::size_t i = 0; i < n; ++i) {
    const auto* a = &v[4 + 4 * i];
    list.agents.cells.push_back({from_nm(a[0]), from_nm(a[1]), from_nm(a[2]), static_cast<AgentState>(a[3])});
  }
  const std::size_t stent_at = 4 + 4 * n;
  const auto ns = static_cast<std::size_t>(v[stent_at]);
  if (v[stent_at] < 0 || v.size() != stent_at + 1 + ns) fail();
  list.stent_cells.assign(v.begin() + static_cast<std::ptrdiff_t>(stent_at + 1), v.end());
  return list;
}

GeometryGrid rasterize_agent_list(std::span<const std::int64_t> values) {
  const auto list = decode_agent_list(values);
  auto mask = GeometryGrid::fluid(list.nx, list.ny);
  for (auto idx : list.stent_cells) {
    if (idx < 0 || idx >= static_cast<std::int64_t>(mask.codes.size())) {
      throw Error("stent cell index out of range in agent list");
    }
    mask.codes[static_cast<std::size_t>(idx)] = static_cast<std::int64_t>(Occupancy::kStent);
  }
  return agents_to_grid(list.agents, list.dx, list.nx, list.ny, &mask);
}

}  // namespace mmsf::solvers
