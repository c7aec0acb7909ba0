#include <cmath>
#include <random>
#include <thread>

#include "mmsf/demos/demos.hpp"
#include "mmsf/solvers/solvers.hpp"

namespace mmsf::demos {
namespace {

using mml::Payload;
using runtime::KernelContext;
using runtime::param_double;
using runtime::param_int;
using runtime::param_string;
using Clock = std::chrono::steady_clock;

std::filesystem::path snapshot_path(const KernelContext& ctx, const std::string& what) {
  return std::filesystem::path(ctx.output_dir()) / "snapshots" /
         (ctx.kernel_id() + "-" + what + "-" + std::to_string(ctx.instance()) + ".csv");
}

bool snapshots_enabled(const KernelContext& ctx) {
  if (ctx.output_dir().empty()) return false;
  std::filesystem::create_directories(std::filesystem::path(ctx.output_dir()) / "snapshots");
  return true;
}

solvers::ScalarField field_from(const Payload& p, double dx) {
  solvers::ScalarField f;
  f.nx = static_cast<int>(p.dims().at(0));
  f.ny = static_cast<int>(p.dims().at(1));
  f.dx = dx;
  f.values = p.doubles();
  return f;
}

Payload payload_from(const solvers::ScalarField& f) { return Payload::f64_grid(f.nx, f.ny, f.values); }

solvers::GeometryGrid geometry_from(const Payload& p) {
  solvers::GeometryGrid g;
  g.nx = static_cast<int>(p.dims().at(0));
  g.ny = static_cast<int>(p.dims().at(1));
  g.codes = p.ints();
  return g;
}

double spec_dx(const KernelContext& ctx) { return ctx.scale().dx.value_or(1e-5); }

// ---------------------------------------------------------------------------
// Pipeline

class Source : public runtime::Kernel {
 public:
  void o_i(KernelContext& ctx) override {
    if (binding(ctx) == mml::OperatorPhase::kOi) {
      ctx.send("out", Payload::i64_array({static_cast<std::int64_t>(ctx.iteration())}));
    }
  }
  void o_f(KernelContext& ctx) override {
    if (binding(ctx) == mml::OperatorPhase::kOf) {
      ctx.send("out", Payload::i64_array({static_cast<std::int64_t>(ctx.steps())}));
    }
  }

 private:
  static mml::OperatorPhase binding(const KernelContext& ctx) {
    const auto* port = ctx.spec().find_port("out");
    return port ? port->binding : mml::OperatorPhase::kOi;
  }
};

class Sink : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override {
    sum_ = 0;
    if (binding(ctx) == mml::OperatorPhase::kFInit) add(ctx);
  }
  void b(KernelContext& ctx) override {
    if (binding(ctx) == mml::OperatorPhase::kB) add(ctx);
  }
  void o_f(KernelContext& ctx) override { ctx.set_output("sum", {static_cast<double>(sum_)}); }

 private:
  static mml::OperatorPhase binding(const KernelContext& ctx) {
    const auto* port = ctx.spec().find_port("in");
    return port ? port->binding : mml::OperatorPhase::kB;
  }
  void add(KernelContext& ctx) {
    const auto msg = ctx.receive("in");
    for (auto v : msg.payload.ints()) sum_ += v;
  }
  std::int64_t sum_ = 0;
};

// ---------------------------------------------------------------------------
// In-stent restenosis

// Smooth muscle cells along the bottom vessel wall; struts sit in that band.
class Smc : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override {
    const auto& p = ctx.params();
    const double dx = spec_dx(ctx);
    list_.dx = dx;
    list_.nx = static_cast<int>(std::lround(ctx.scale().extent.value_or(48 * dx) / dx));
    list_.ny = static_cast<int>(param_int(p, "isr.ny", 24));
    list_.agents.extent_x = list_.nx * dx;
    list_.agents.extent_y = list_.ny * dx;
    const int band = static_cast<int>(param_int(p, "smc.band", 3));
    const int struts = static_cast<int>(param_int(p, "smc.struts", 4));
    const double radius = param_double(p, "smc.radius", 0.7) * dx;
    if (band < 1 || band >= list_.ny || struts < 0 || !(radius > 0)) throw Error("smc: bad wall band or strut layout");

    std::mt19937_64 rng(ctx.seed());
    const auto n = param_int(p, "smc.agents", 40);
    for (std::int64_t i = 0; i < n; ++i) {
      const double x = solvers::unit_draw(rng()) * list_.agents.extent_x;
      const double y = solvers::unit_draw(rng()) * band * dx;
      list_.agents.cells.push_back({x, y, radius, solvers::AgentState::kQuiescent});
    }
    for (int k = 0; k < struts; ++k) {
      const int x0 = static_cast<int>((k + 0.5) * list_.nx / struts);
      for (int x = x0; x < std::min(x0 + 2, list_.nx); ++x) list_.stent_cells.push_back(list_.ny > 1 ? list_.nx + x : x);
    }

    params_.wss_max = param_double(p, "smc.wss_max", 2e-5);
    params_.c_max = param_double(p, "smc.c_max", 0.5);
    params_.growth = param_double(p, "smc.growth", 0.2) * dx;
    params_.r_div = param_double(p, "smc.r_div", 1.0) * dx;
    // Healthy flow and no drug until the first feedback arrives: nothing grows.
    wss_ = solvers::ScalarField::zeros(list_.nx, list_.ny, dx);
    std::fill(wss_.values.begin(), wss_.values.end(), params_.wss_max);
    drug_ = solvers::ScalarField::zeros(list_.nx, list_.ny, dx);
    counts_.clear();
  }

  void o_i(KernelContext& ctx) override { ctx.send("cells_out", Payload::i64_array(solvers::encode_agent_list(list_))); }

  void s(KernelContext& ctx) override {
    params_.seed = ctx.seed() + ctx.iteration();
    list_.agents = solvers::smc_step(list_.agents, wss_, drug_, params_);
  }

  void b(KernelContext& ctx) override {
    wss_ = field_from(ctx.receive("wss_in").payload, list_.dx);
    drug_ = field_from(ctx.receive("drug_in").payload, list_.dx);
    counts_.push_back(static_cast<double>(list_.agents.cells.size()));
    ctx.set_output("agent_count", counts_);
    if (snapshots_enabled(ctx)) {
      solvers::write_csv(snapshot_path(ctx, "agents-" + std::to_string(ctx.iteration())), list_.agents);
    }
  }

  void o_f(KernelContext& ctx) override {
    ctx.set_output("agent_count", counts_);
    ctx.set_output("final_radius_sum", {radius_sum()});
  }

 private:
  double radius_sum() const {
    double s = 0;
    for (const auto& a : list_.agents.cells) s += a.r;
    return s;
  }

  solvers::AgentList list_;
  solvers::SmcParams params_;
  solvers::ScalarField wss_;
  solvers::ScalarField drug_;
  std::vector<double> counts_;
};

class Itf : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override { geometry_ = geometry_from(ctx.receive("geom_in").payload); }
  void s(KernelContext&) override { geometry_ = solvers::thrombus_fill(geometry_); }
  void o_f(KernelContext& ctx) override {
    if (snapshots_enabled(ctx)) solvers::write_csv(snapshot_path(ctx, "geometry"), geometry_);
    ctx.set_output("thrombus_cells", {static_cast<double>(geometry_.count(solvers::Occupancy::kThrombus))});
    ctx.send("geom_out", Payload::i64_grid(geometry_.nx, geometry_.ny, geometry_.codes));
  }

 private:
  solvers::GeometryGrid geometry_;
};

// Flow through the lumen: periodic in x, driven by a body force. This is the
// parallel section when instances are double-mapped.
class Bf : public runtime::Kernel {
 public:
  explicit Bf(std::shared_ptr<DoubleMapSlot> slot) : slot_(std::move(slot)) {}
  ~Bf() override { release(); }

  void f_init(KernelContext& ctx) override {
    if (slot_) {
      window_.wait_start = since_epoch();
      slot_->guard->acquire(slot_->instance);
      holding_ = true;
      window_.start = since_epoch();
    }
    const auto geo = geometry_from(ctx.receive("geom_in").payload);
    grid_ = solvers::LatticeGrid::uniform(geo.nx, geo.ny, param_double(ctx.params(), "bf.tau", 0.52));
    grid_.periodic_y = false;
    grid_.force = {param_double(ctx.params(), "bf.force", 1e-5), 0.0};
    for (std::size_t c = 0; c < geo.codes.size(); ++c) {
      if (geo.codes[c] != static_cast<std::int64_t>(solvers::Occupancy::kFluid)) grid_.flags[c] = solvers::CellFlag::kWall;
    }
  }
  void s(KernelContext&) override { solvers::lbm_step(grid_); }
  void o_f(KernelContext& ctx) override {
    auto wss = solvers::wall_shear_stress(grid_);
    wss.dx = spec_dx(ctx);
    if (snapshots_enabled(ctx)) solvers::write_csv(snapshot_path(ctx, "wss"), wss);
    ctx.send("wss_out", payload_from(wss));
    if (slot_ && holding_) {
      window_.end = since_epoch();
      {
        std::lock_guard lock(*slot_->mu);
        slot_->windows->push_back(window_);
      }
      release();
    }
  }

 private:
  double since_epoch() const { return std::chrono::duration<double>(Clock::now() - slot_->epoch).count(); }
  void release() {
    if (slot_ && holding_) {
      holding_ = false;
      slot_->guard->release(slot_->instance);
    }
  }

  std::shared_ptr<DoubleMapSlot> slot_;
  bool holding_ = false;
  DoubleMapSlot::Window window_;
  solvers::LatticeGrid grid_;
};

// Drug released from the struts; source cells are held at their value.
class Dd : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override {
    source_ = field_from(ctx.receive("field_in").payload, spec_dx(ctx));
    field_ = source_;
    diffusivity_ = param_double(ctx.params(), "dd.diffusivity", 2e-11);
  }
  void s(KernelContext& ctx) override {
    field_ = solvers::diffusion_step(field_, diffusivity_, ctx.scale().dt);
    for (std::size_t i = 0; i < field_.values.size(); ++i) {
      if (source_.values[i] > 0) field_.values[i] = source_.values[i];
    }
  }
  void o_f(KernelContext& ctx) override {
    if (snapshots_enabled(ctx)) solvers::write_csv(snapshot_path(ctx, "drug"), field_);
    ctx.set_output("drug_total", {field_.sum()});
    ctx.send("drug_out", payload_from(field_));
  }

 private:
  solvers::ScalarField source_;
  solvers::ScalarField field_;
  double diffusivity_ = 0;
};

// ---------------------------------------------------------------------------
// Arterial flow

std::array<double, solvers::kOutlets> outlet_pressures(const runtime::Params& p) {
  std::array<double, solvers::kOutlets> out{};
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = param_double(p, outlet_pressure_key(o), 90.0);
  return out;
}

// Channel with a pressure inlet on the left and four pressure outlets stacked
// on the right edge. Outlet densities follow the coarse model's pressures.
class HemoFine : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override {
    const auto& p = ctx.params();
    multiscale_ = param_string(p, "hemo.mode", "ms") == "ms";
    interval_ = static_cast<std::uint64_t>(param_int(p, "hemo.interval", 100));
    if (interval_ < 1) throw Error("hemo.interval must be at least 1");
    step_budget_ = std::chrono::duration<double, std::milli>(param_double(p, "hemo.fine_step_ms", 0.0));
    rho_per_mmhg_ = param_double(p, "hemo.rho_per_mmhg", 2e-5);
    p_ref_ = param_double(p, "hemo.p_ref", 90.0);
    const int nx = static_cast<int>(param_int(p, "hemo.nx", 64));
    const int ny = static_cast<int>(param_int(p, "hemo.ny", 32));
    if (nx < 4 || ny < static_cast<int>(solvers::kOutlets)) throw Error("hemo grid too small");
    grid_ = solvers::LatticeGrid::uniform(nx, ny, param_double(p, "hemo.tau", 0.52));
    grid_.periodic_x = false;
    grid_.periodic_y = false;
    const double inlet = param_double(p, "hemo.inlet_rho", 1.0005);
    for (int y = 0; y < ny; ++y) {
      grid_.flags[grid_.index(0, y)] = solvers::CellFlag::kInlet;
      grid_.boundary_density[grid_.index(0, y)] = inlet;
      grid_.flags[grid_.index(nx - 1, y)] = solvers::CellFlag::kOutlet;
    }
    apply_pressures(outlet_pressures(p));
    exchanges_ = 0;
  }

  void o_i(KernelContext& ctx) override {
    if (multiscale_ && ctx.iteration() % interval_ == 0) ctx.send("flow_out", Payload::f64_array(outlet_flows()));
  }

  void s(KernelContext&) override {
    const auto t0 = Clock::now();
    solvers::lbm_step(grid_);
    // Pads each step to the configured budget so desk runs have a
    // controllable compute/coupling ratio.
    if (step_budget_.count() > 0) std::this_thread::sleep_until(t0 + std::chrono::duration_cast<Clock::duration>(step_budget_));
  }

  void b(KernelContext& ctx) override {
    if ((ctx.iteration() + 1) % interval_ != 0) return;
    if (multiscale_) {
      const auto values = ctx.receive("pressure_in").payload.doubles();
      if (values.size() != solvers::kOutlets) throw Error("pressure message needs 4 values");
      std::array<double, solvers::kOutlets> p{};
      std::copy(values.begin(), values.end(), p.begin());
      apply_pressures(p);
    } else {
      apply_pressures(outlet_pressures(ctx.params()));
    }
    ++exchanges_;
  }

  void o_f(KernelContext& ctx) override {
    std::vector<double> ux(grid_.f.size() / solvers::kQ);
    for (int y = 0; y < grid_.ny; ++y) {
      for (int x = 0; x < grid_.nx; ++x) ux[grid_.index(x, y)] = grid_.velocity(x, y)[0];
    }
    ctx.set_output("outlet_flow", outlet_flows());
    ctx.set_output("exchanges", {static_cast<double>(exchanges_)});
    ctx.set_output("mass", {grid_.total_mass()});
    if (snapshots_enabled(ctx)) {
      solvers::ScalarField f{grid_.nx, grid_.ny, 1.0, solvers::BoundaryCondition::kNoFlux, ux};
      solvers::write_csv(snapshot_path(ctx, "ux"), f);
    }
    ctx.set_output("ux", std::move(ux));
  }

 private:
  void apply_pressures(const std::array<double, solvers::kOutlets>& p) {
    const int seg = grid_.ny / static_cast<int>(solvers::kOutlets);
    for (int y = 0; y < grid_.ny; ++y) {
      const auto o = std::min<std::size_t>(static_cast<std::size_t>(y / seg), solvers::kOutlets - 1);
      grid_.boundary_density[grid_.index(grid_.nx - 1, y)] = 1.0 + (p[o] - p_ref_) * rho_per_mmhg_;
    }
  }

  std::vector<double> outlet_flows() const {
    std::vector<double> q(solvers::kOutlets, 0.0);
    const int seg = grid_.ny / static_cast<int>(solvers::kOutlets);
    const int x = grid_.nx - 2;
    for (int y = 0; y < grid_.ny; ++y) {
      const auto o = std::min<std::size_t>(static_cast<std::size_t>(y / seg), solvers::kOutlets - 1);
      q[o] += grid_.density(x, y) * grid_.velocity(x, y)[0];
    }
    return q;
  }

  solvers::LatticeGrid grid_;
  bool multiscale_ = true;
  std::uint64_t interval_ = 100;
  std::chrono::duration<double, std::milli> step_budget_{0};
  double rho_per_mmhg_ = 2e-5;
  double p_ref_ = 90.0;
  std::uint64_t exchanges_ = 0;
};

class HemoCoarse : public runtime::Kernel {
 public:
  void f_init(KernelContext& ctx) override {
    const auto& p = ctx.params();
    constant_ = param_string(p, "coarse.model", "sine") == "constant";
    model_.p_mean = param_double(p, "coarse.p_mean", 90.0);
    model_.heart_rate = param_double(p, "coarse.heart_rate", 70.0);
    model_.amplitude = param_double(p, "coarse.amplitude", 10.0);
    for (std::size_t o = 0; o < solvers::kOutlets; ++o) {
      model_.resistance[o] = param_double(p, "coarse.resistance." + std::to_string(o), 1.0);
    }
    step_seconds_ = param_double(p, "hemo.fine_dt", 2.3766e-06) * static_cast<double>(param_int(p, "hemo.interval", 100));
    step_budget_ = std::chrono::duration<double, std::milli>(param_double(p, "coarse.step_ms", 1.0));
    flows_.clear();
  }
  void o_i(KernelContext& ctx) override {
    std::vector<double> p(solvers::kOutlets);
    if (constant_) {
      const auto c = outlet_pressures(ctx.params());
      std::copy(c.begin(), c.end(), p.begin());
    } else {
      const double t = static_cast<double>(ctx.iteration()) * step_seconds_;
      for (std::size_t o = 0; o < p.size(); ++o) p[o] = solvers::pressure_at(model_, t, o);
    }
    ctx.send("pressure_out", Payload::f64_array(std::move(p)));
  }
  void s(KernelContext&) override {
    if (step_budget_.count() > 0) std::this_thread::sleep_for(step_budget_);
  }
  void b(KernelContext& ctx) override {
    const auto msg = ctx.receive("flow_in");
    for (auto q : msg.payload.doubles()) flows_.push_back(q);
  }
  void o_f(KernelContext& ctx) override { ctx.set_output("flow", flows_); }

 private:
  solvers::PressureModel model_;
  bool constant_ = false;
  double step_seconds_ = 0;
  std::chrono::duration<double, std::milli> step_budget_{0};
  std::vector<double> flows_;
};

template <typename K>
runtime::KernelFactory factory() {
  return [](const runtime::KernelSetup&) { return std::make_unique<K>(); };
}

}  // namespace

std::string outlet_pressure_key(std::size_t outlet) { return "ss.pressure." + std::to_string(outlet); }

void register_builtin_kernels(runtime::KernelRegistry& registry, std::shared_ptr<DoubleMapSlot> slot) {
  registry.register_kernel("source", factory<Source>());
  registry.register_kernel("sink", factory<Sink>());
  registry.register_kernel("isr.smc", factory<Smc>());
  registry.register_kernel("isr.itf", factory<Itf>());
  registry.register_kernel("isr.bf", [slot](const runtime::KernelSetup&) { return std::make_unique<Bf>(slot); });
  registry.register_kernel("isr.dd", factory<Dd>());
  registry.register_kernel("hemo.fine", factory<HemoFine>());
  registry.register_kernel("hemo.coarse", factory<HemoCoarse>());
}

runtime::KernelRegistry builtin_registry(std::shared_ptr<DoubleMapSlot> slot) {
  runtime::KernelRegistry reg;
  register_builtin_kernels(reg, std::move(slot));
  return reg;
}

}  // namespace mmsf::demos
