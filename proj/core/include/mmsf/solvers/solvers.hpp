#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmsf/error.hpp"

// Desk-scale single-scale kernels. Everything here is sequential and
// deterministic; distinct grids may be advanced from different threads.
namespace mmsf::solvers {

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class StabilityError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Lattice Boltzmann (D2Q9, BGK, Guo forcing, half-way bounce-back)

enum class CellFlag : std::uint8_t { kFluid, kWall, kSolid, kInlet, kOutlet };

inline constexpr int kQ = 9;
inline constexpr std::array<int, kQ> kCx{0, 1, 0, -1, 0, 1, -1, -1, 1};
inline constexpr std::array<int, kQ> kCy{0, 0, 1, 0, -1, 1, 1, -1, -1};
inline constexpr std::array<int, kQ> kOpposite{0, 3, 4, 1, 2, 7, 8, 5, 6};
inline constexpr std::array<double, kQ> kWeight{4.0 / 9,  1.0 / 9,  1.0 / 9,  1.0 / 9, 1.0 / 9,
                                                1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};

double equilibrium(int i, double rho, double ux, double uy);

struct LatticeGrid {
  int nx = 0;
  int ny = 0;
  double tau = 0.52;
  std::array<double, 2> force{0.0, 0.0};  // body acceleration, lattice units
  bool periodic_x = true;
  bool periodic_y = true;
  std::vector<CellFlag> flags;
  std::vector<double> f;                 // kQ values per cell, cell-major
  std::vector<double> boundary_density;  // prescribed rho at inlet/outlet cells

  // All-fluid grid at rest with unit density. Throws StabilityError for
  // tau <= 0.5.
  static LatticeGrid uniform(int nx, int ny, double tau);

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * nx + x; }
  bool is_wall(std::size_t cell) const {
    return flags[cell] == CellFlag::kWall || flags[cell] == CellFlag::kSolid;
  }
  double viscosity() const { return (tau - 0.5) / 3.0; }

  double density(int x, int y) const;
  // Guo-corrected velocity: (sum f c + rho g / 2) / rho.
  std::array<double, 2> velocity(int x, int y) const;

  double total_mass() const;
  std::array<double, 2> total_momentum() const;  // raw sum of f c
  std::size_t fluid_cells() const;

  // Resets a cell to equilibrium at (rho, u).
  void set_equilibrium(int x, int y, double rho, double ux, double uy);
};

// One collide-and-stream update in place.
void lbm_step(LatticeGrid& grid);

// ---------------------------------------------------------------------------
// Fields and geometry

enum class BoundaryCondition { kNoFlux, kFixed };

struct ScalarField {
  int nx = 0;
  int ny = 0;
  double dx = 1.0;
  BoundaryCondition bc = BoundaryCondition::kNoFlux;
  std::vector<double> values;

  static ScalarField zeros(int nx, int ny, double dx, BoundaryCondition bc = BoundaryCondition::kNoFlux);
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * nx + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * nx + x]; }
  // Value of the cell containing the point (meters), clamped to the grid.
  double sample(double px, double py) const;
  double sum() const;
};

enum class Occupancy : std::int64_t { kFluid = 0, kTissue = 1, kStent = 2, kThrombus = 3 };

struct GeometryGrid {
  int nx = 0;
  int ny = 0;
  std::vector<std::int64_t> codes;

  static GeometryGrid fluid(int nx, int ny);
  std::int64_t& at(int x, int y) { return codes[static_cast<std::size_t>(y) * nx + x]; }
  std::int64_t at(int x, int y) const { return codes[static_cast<std::size_t>(y) * nx + x]; }
  std::size_t count(Occupancy code) const;
  bool operator==(const GeometryGrid&) const = default;
};

// tau_w = rho nu du_t/dn at every fluid cell with an axis-aligned wall
// neighbor, by a one-sided difference along the wall normal (second order
// when two fluid cells are available). Each wall cell next to fluid receives
// the mean of its fluid neighbors' values; all other cells are zero.
ScalarField wall_shear_stress(const LatticeGrid& grid);

// Explicit 5-point FTCS update. Throws StabilityError if dt > dx^2/(4D).
ScalarField diffusion_step(const ScalarField& field, double diffusivity, double dt);

// Fluid cells with at least two 4-neighbors that are stent or tissue become
// thrombus. Single simultaneous pass.
GeometryGrid thrombus_fill(const GeometryGrid& geometry);

// ---------------------------------------------------------------------------
// Smooth muscle cell agents

enum class AgentState : std::int64_t { kQuiescent = 0, kGrowing = 1 };

struct Agent {
  double x = 0.0;  // meters
  double y = 0.0;
  double r = 0.0;
  AgentState state = AgentState::kQuiescent;

  bool operator==(const Agent&) const = default;
};

struct AgentSet {
  double extent_x = 0.0;
  double extent_y = 0.0;
  std::vector<Agent> cells;

  bool operator==(const AgentSet&) const = default;
};

struct SmcParams {
  double wss_max = 1.0;
  double c_max = 1.0;
  double growth = 0.0;      // radius increment per successful growth draw
  double r_div = 1.0;       // division radius
  std::uint64_t seed = 0;
  int max_relax_sweeps = 200;
};

// Uniform in [0,1) from the top 53 bits of one mt19937_64 draw.
double unit_draw(std::uint64_t raw);

// Growth probability p = max(0, 1 - wss/wss_max) * max(0, 1 - c/c_max) per
// agent; a cell that grows past r_div divides into two cells of radius
// r_div/sqrt(2) along a random direction, then overlaps are relaxed by
// pairwise push-apart until none exceeds 1% of the smaller radius.
AgentSet smc_step(const AgentSet& agents, const ScalarField& wss, const ScalarField& drug,
                  const SmcParams& params);

// A voxel is tissue iff its center lies within some agent disc; stent cells of
// the mask (same dims) override.
GeometryGrid agents_to_grid(const AgentSet& agents, double dx, int nx, int ny,
                            const GeometryGrid* stent_mask = nullptr);

// Self-describing 8-byte-integer agent list, lengths in nanometers:
//   [nx, ny, dx_nm, n, (x_nm, y_nm, r_nm, state) * n, n_stent, stent cell index * n_stent]
struct AgentList {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  AgentSet agents;
  std::vector<std::int64_t> stent_cells;
};

std::vector<std::int64_t> encode_agent_list(const AgentList& list);
AgentList decode_agent_list(std::span<const std::int64_t> values);

// Rasterizes an encoded agent list (agents-to-grid converter).
GeometryGrid rasterize_agent_list(std::span<const std::int64_t> values);

// Geometry to drug-source field: 1.0 at stent cells, 0.0 elsewhere
// (grid-to-fields converter).
ScalarField geometry_to_source_field(const GeometryGrid& geometry, double dx);

// ---------------------------------------------------------------------------
// Lumped pressure model

inline constexpr std::size_t kOutlets = 4;

struct PressureModel {
  double p_mean = 90.0;       // mmHg
  double heart_rate = 70.0;   // beats per minute
  double amplitude = 0.0;     // mmHg
  std::array<double, kOutlets> resistance{1.0, 1.0, 1.0, 1.0};
  double cardiac_output = 5.68;  // l/min, metadata only

  double period() const { return 60.0 / heart_rate; }
};

// (P_mean + A sin(2 pi HR/60 t)) * resistance[outlet]. Throws IndexError.
double pressure_at(const PressureModel& model, double t, std::size_t outlet);

// ---------------------------------------------------------------------------
// Snapshots

void write_csv(const std::filesystem::path& path, const ScalarField& field);
void write_csv(const std::filesystem::path& path, const GeometryGrid& grid);
void write_csv(const std::filesystem::path& path, const AgentSet& agents);

// 16-byte header: "MMGD", u32 nx, u32 ny, u8 kind tag (payload kind), 3 pad
// bytes; then little-endian values row by row.
void write_binary(const std::filesystem::path& path, const ScalarField& field);
void write_binary(const std::filesystem::path& path, const GeometryGrid& grid);
ScalarField read_binary_field(const std::filesystem::path& path);
GeometryGrid read_binary_geometry(const std::filesystem::path& path);

}  // namespace mmsf::solvers
