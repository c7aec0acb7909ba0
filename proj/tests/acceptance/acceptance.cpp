// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "mmsf/demos/demos.hpp"
#include "mmsf/mml/xmml.hpp"
#include "mmsf/perf/perf.hpp"
#include "mmsf/resman/resman.hpp"
#include "mmsf/runtime/runtime.hpp"
#include "mmsf/solvers/solvers.hpp"
#include "mmsf/transport/channel.hpp"
#include "mmsf/transport/frame.hpp"
#include "mmsf/transport/relay.hpp"
#include "mmsf/transport/shaper.hpp"
#include "support/solver_oracles.hpp"

using namespace mmsf;
using namespace std::chrono_literals;

namespace {

const std::filesystem::path kFixtures = MMSF_FIXTURE_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects the sub-checks of one criterion into a single line.
class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {}

  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
    else notes_.push_back(what);
  }
  void note(const std::string& what) { notes_.push_back(what); }

  bool passed() const { return failures_.empty(); }

  void print(int number, double elapsed) const {
    std::printf("%s %d %s (%.1f s)\n", passed() ? "PASS" : "FAIL", number, name_.c_str(), elapsed);
    for (const auto& f : failures_) std::printf("    failed: %s\n", f.c_str());
    for (const auto& n : notes_) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }

 private:
  std::string name_;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void efficiency_arithmetic(Criterion& c) {
  const struct {
    double ss, ms, expected;
  } rows[] = {{2271, 2298, 98.8}, {862, 907, 95.0}};
  for (const auto& r : rows) {
    const double pct = 100.0 * perf::efficiency(r.ss, r.ms);
    c.check(std::abs(pct - r.expected) <= 0.1, fmt("efficiency(%.0f, %.0f) = %.3f%%, want %.1f%% +/- 0.1", r.ss, r.ms,
                                                   pct, r.expected));
  }
}

void overhead_band(Criterion& c) {
  demos::HemoOptions o;
  o.mode = demos::HemoMode::kMultiscale;
  o.interval = 100;
  o.fine_steps = 1000;
  o.rtt_ms = 11.0;
  o.config["hemo.fine_step_ms"] = "5";

  auto ss = o;
  ss.mode = demos::HemoMode::kSingleScale;
  const auto baseline = demos::run_hemo(ss);
  o.run.baseline_wall_ns = baseline.wall_ns;
  const auto r = demos::run_hemo(o);

  const double exchanges = r.outputs.at("fine").at("exchanges").at(0);
  const auto* coarse = r.report.find("coarse");
  const auto* fine = r.report.find("fine");
  c.check(exchanges == 10, fmt("fine kernel exchanged %.0f times, want 10", exchanges));
  c.check(r.report.critical_kernel == "fine", "critical kernel is the fine kernel");
  if (coarse && fine) {
    const double coarse_ms = coarse->compute_ns / 1e6 / std::max(1.0, exchanges);
    const double fine_ms = fine->compute_ns / 1e6 / std::max(1.0, exchanges);
    c.check(coarse_ms < fine_ms, fmt("compute per coupling step: coarse %.2f ms < fine %.2f ms", coarse_ms, fine_ms));
  }
  const double per_exchange_ms = r.report.coupling_ns / 1e6 / std::max(1.0, exchanges);
  c.check(per_exchange_ms < 11.0, fmt("mean coupling per exchange %.2f ms < RTT 11 ms", per_exchange_ms));
  const double overhead_pct = 100.0 * r.report.overhead;
  c.check(overhead_pct >= 1.0 && overhead_pct <= 10.0, fmt("coupling overhead %.2f%% within [1, 10]%%", overhead_pct));
  if (r.report.efficiency) c.note(fmt("efficiency against the paired single-scale run: %.1f%%", 100 * *r.report.efficiency));
}

void double_mapping(Criterion& c) {
  const auto single = resman::load_scenarios(kFixtures / "huygens.sched").at(0).simulate().report;
  const auto dbl = resman::load_scenarios(kFixtures / "huygens-double.sched").at(0).simulate().report;
  const double ratio = dbl.usage_pct / single.usage_pct;
  c.check(ratio >= 1.5, fmt("usage double/single = %.2f%% / %.2f%% = %.3f >= 1.5", dbl.usage_pct, single.usage_pct,
                            ratio));
  c.check(dbl.max_inflation() <= 0.20, fmt("worst cycle inflation %.1f%% <= 20%%", 100 * dbl.max_inflation()));
  c.check(std::abs(single.usage_pct - 27.0) <= 7.0, fmt("single usage %.2f%% within 27 +/- 7", single.usage_pct));
}

void coupling_pattern(Criterion& c) {
  const auto model = mml::load_xmml(kFixtures / "isr.xmml");
  demos::IsrOptions o;
  o.iterations = 3;
  const auto r = demos::run_isr(o);
  const auto groups = demos::group_isr_log(r.messages);
  c.check(groups.size() == 3, fmt("%zu macro-iterations, want 3", groups.size()));

  const std::multiset<std::string> edges{"SMC->ITF", "ITF->BF", "ITF->DD", "BF->SMC", "DD->SMC"};
  std::multiset<std::string> fixture_edges;
  for (const auto& cd : model.conduits) fixture_edges.insert(cd.from.submodel + "->" + cd.to.submodel);
  c.check(fixture_edges == edges, "fixture graph is SMC->ITF, ITF->BF, ITF->DD, BF->SMC, DD->SMC");

  int bad_kinds = 0, bad_sets = 0;
  for (const auto& g : groups) {
    std::multiset<std::string> got;
    for (const auto& m : g.messages) {
      got.insert(m.from.submodel + "->" + m.to.submodel);
      const auto* cd = model.find_conduit(m.conduit);
      if (!cd) {
        ++bad_kinds;
        continue;
      }
      const auto out_kind = model.find_submodel(cd->from.submodel)->find_port(cd->from.port)->type.kind;
      const auto in_kind = model.find_submodel(cd->to.submodel)->find_port(cd->to.port)->type.kind;
      bad_kinds += m.sent_kind != out_kind || m.kind != in_kind;
    }
    bad_sets += got != edges;
  }
  c.check(bad_sets == 0, fmt("%d macro-iterations deviate from the fixture conduit set", bad_sets));
  c.check(bad_kinds == 0, fmt("%d messages with a payload kind other than the declared port kinds", bad_kinds));

  // The declared kinds themselves: agent list, geometry grid, double fields.
  auto port_kind = [&](const std::string& sub, const std::string& port) {
    return model.find_submodel(sub)->find_port(port)->type.kind;
  };
  std::map<std::string, mml::PayloadKind> sent;
  for (const auto& cd : model.conduits) sent[cd.from.submodel + "->" + cd.to.submodel] = port_kind(cd.from.submodel, cd.from.port);
  c.check(sent["SMC->ITF"] == mml::PayloadKind::kI64Array, "SMC->ITF carries an i64 agent list");
  c.check(sent["ITF->BF"] == mml::PayloadKind::kI64Grid && sent["ITF->DD"] == mml::PayloadKind::kI64Grid,
          "ITF->BF and ITF->DD carry i64 geometry grids");
  c.check(sent["BF->SMC"] == mml::PayloadKind::kF64Grid && sent["DD->SMC"] == mml::PayloadKind::kF64Grid,
          "BF->SMC and DD->SMC carry f64 fields");
}

// ---------------------------------------------------------------------------
// Transport

bytes::Buffer random_frame(std::mt19937_64& rng, std::size_t len) {
  bytes::Buffer body(len);
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    const auto v = rng();
    std::memcpy(body.data() + i, &v, 8);
  }
  for (; i < len; ++i) body[i] = static_cast<std::byte>(rng() & 0xff);
  return transport::encode_frame(transport::conduit_hash("acceptance"), rng(),
                                 static_cast<std::uint8_t>(mml::PayloadKind::kOpaqueBytes), body);
}

struct Link {
  std::unique_ptr<transport::Channel> tx;
  std::unique_ptr<transport::Channel> rx;
};

void transport_bit_exact(Criterion& c) {
  using namespace transport;
  Listener terminal;
  const std::size_t chunk_sizes[] = {4096, 65536, StreamConfig::kDefaultChunkSize};

  // One channel per (route, shaping, k).
  std::vector<std::string> names;
  for (int relayed = 0; relayed < 2; ++relayed) {
    for (int shaped = 0; shaped < 2; ++shaped) {
      for (int k = 1; k <= 8; ++k) names.push_back(fmt("acc-%s-%s-k%d", relayed ? "relay2" : "direct", shaped ? "shaped" : "raw", k));
    }
  }
  RelayRoute second, first;
  for (const auto& n : names) {
    if (n.find("relay2") != std::string::npos) second[n] = terminal.address();
  }
  auto r2 = run_relay({}, second);
  for (const auto& n : names) {
    if (n.find("relay2") != std::string::npos) first[n] = r2->address();
  }
  auto r1 = run_relay({}, first);

  std::mt19937_64 rng(20240601);
  std::map<std::string, Link> links;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& n = names[i];
    StreamConfig cfg;
    cfg.streams = static_cast<int>(i % 8) + 1;
    cfg.chunk_size = chunk_sizes[rng() % 3];
    cfg.io_timeout = 30s;
    const bool relayed = n.find("relay2") != std::string::npos;
    const auto addr = relayed ? EndpointAddress::relayed(n, {r1->address(), r2->address()}, terminal.address())
                              : EndpointAddress::tcp(n, terminal.address());
    auto fut = std::async(std::launch::async, [&] { return open_channel(addr, cfg); });
    auto rx = terminal.accept(n, 5000ms);
    auto tx = fut.get();
    if (n.find("shaped") != std::string::npos) {
      LinkShape shape{0.5 + static_cast<double>(rng() % 4), std::nullopt};
      if (rng() % 2) shape.bandwidth_bytes_per_s = 2e9;
      tx = shape_link(std::move(tx), shape);
    }
    links[n] = {std::move(tx), std::move(rx)};
  }

  // Log-uniform sizes from 1 B to 20 MB, both extremes included.
  const double lo = 0.0, hi = std::log(20e6);
  std::uniform_real_distribution<double> log_size(lo, hi);
  int mismatches = 0, errors = 0;
  std::uint64_t total = 0;
  std::set<std::string> used;
  for (int i = 0; i < 1000; ++i) {
    std::size_t len = i == 0 ? 1 : i == 1 ? 20'000'000 : static_cast<std::size_t>(std::exp(log_size(rng)));
    len = std::clamp<std::size_t>(len, 1, 20'000'000);
    const auto& name = names[rng() % names.size()];
    used.insert(name);
    auto& link = links[name];
    const auto frame = random_frame(rng, len);
    const auto want = bytes::fnv1a64(frame);
    try {
      auto got = std::async(std::launch::async, [&] { return link.rx->recv_framed(); });
      link.tx->send_framed(frame);
      const auto received = got.get();
      if (!received || bytes::fnv1a64(*received) != want) {
        ++mismatches;
      } else {
        (void)decode_frame(*received);
      }
    } catch (const std::exception& e) {
      if (errors++ < 3) c.note(fmt("frame %d on %s: %s", i, name.c_str(), e.what()));
    }
    total += frame.size();
  }
  c.check(mismatches == 0 && errors == 0,
          fmt("1000 frames, %.1f MB over %zu channel configs: %d hash mismatches, %d errors", total / 1e6, used.size(),
              mismatches, errors));
  for (auto& [n, l] : links) {
    l.tx->close();
    l.rx->close();
  }

  // Killing a relay mid-transfer: both ends see an error, no partial frame.
  RelayRoute doomed_route{{"doomed", terminal.address()}};
  auto doomed = run_relay({}, doomed_route);
  StreamConfig cfg;
  cfg.streams = 3;
  cfg.chunk_size = 4096;
  cfg.io_timeout = 3000ms;
  const auto addr = EndpointAddress::relayed("doomed", {doomed->address()}, terminal.address());
  auto fut = std::async(std::launch::async, [&] { return open_channel(addr, cfg); });
  auto rx = terminal.accept("doomed", 5000ms);
  auto tx = shape_link(fut.get(), {0.0, 4e6});
  const auto big = random_frame(rng, 4'000'000);
  auto sender = std::async(std::launch::async, [&]() -> std::string {
    try {
      tx->send_framed(big);
      return "sent";
    } catch (const TransportError&) {
      return "error";
    }
  });
  auto receiver = std::async(std::launch::async, [&]() -> std::string {
    try {
      auto f = rx->recv_framed();
      return f ? "frame" : "closed";
    } catch (const TransportError&) {
      return "error";
    }
  });
  std::this_thread::sleep_for(200ms);
  doomed->kill();
  const auto s = sender.get(), r = receiver.get();
  c.check(s == "error" && r == "error", fmt("relay kill mid-frame: sender %s, receiver %s", s.c_str(), r.c_str()));
}

// ---------------------------------------------------------------------------
// Solvers

void solver_oracles(Criterion& c) {
  using namespace mmsf::test;
  {
    const int h = 16;
    const double g = 1e-6;
    auto grid = channel(h, 0.52, g);
    run_to_steady(grid);
    const double nu = grid.viscosity();
    const double want = g * h * h / (8 * nu);
    const double got = 0.5 * (grid.velocity(0, h / 2)[0] + grid.velocity(0, h / 2 + 1)[0]);
    const double err = std::abs(got - want) / want;
    c.check(err < 0.02, fmt("Poiseuille centerline %.5g vs gH^2/(8nu) %.5g: %.2f%% < 2%%", got, want, 100 * err));
    const auto wss = wall_shear_stress(grid);
    const double tau_w = 1.0 * g * h / 2;
    double worst = 0.0;
    for (int x = 0; x < grid.nx; ++x) {
      for (int y : {1, h}) worst = std::max(worst, std::abs(wss.at(x, y) - tau_w) / tau_w);
    }
    c.check(worst < 0.05, fmt("wall shear stress vs rho g H/2: worst %.2f%% < 5%%", 100 * worst));
  }
  {
    const int n = 121, steps = 200;
    const double D = 0.2;
    auto f = ScalarField::zeros(n, n, 1.0);
    const int m = n / 2;
    f.at(m, m) = 1.0;
    for (int i = 0; i < steps; ++i) f = diffusion_step(f, D, 1.0);
    double num = 0, den = 0;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double r2 = (x - m) * (x - m) + (y - m) * (y - m);
        const double exact = std::exp(-r2 / (4 * D * steps)) / (4 * std::numbers::pi * D * steps);
        num += (f.at(x, y) - exact) * (f.at(x, y) - exact);
        den += exact * exact;
      }
    }
    const double l2 = std::sqrt(num / den);
    c.check(l2 < 0.03, fmt("diffusion point release vs heat kernel after %d steps: L2 %.2f%% < 3%%", steps, 100 * l2));
  }
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.02, 0.02), r(0.98, 1.02);
    auto grid = LatticeGrid::uniform(32, 16, 0.52);
    for (int y = 0; y < grid.ny; ++y) {
      for (int x = 0; x < grid.nx; ++x) grid.set_equilibrium(x, y, r(rng), u(rng), u(rng));
    }
    const double m0 = grid.total_mass();
    for (int i = 0; i < 1000; ++i) lbm_step(grid);
    const double rel = std::abs(grid.total_mass() - m0) / m0;
    c.check(rel <= 1e-12, fmt("periodic mass after 1000 steps: relative change %.2e <= 1e-12", rel));
  }
  {
    SmcFixture fx(kFixtures);
    auto set = fx.agents, oracle = fx.agents;
    bool same = true;
    for (int it = 0; it < 6 && same; ++it) {
      fx.params.seed = 42 + it;
      set = smc_step(set, fx.wss, fx.drug, fx.params);
      oracle = smc_oracle(oracle, fx.wss, fx.drug, fx.params);
      same = set == oracle;
    }
    c.check(same && fx.agents.cells.size() == 50,
            fmt("smc_step on the 50-agent fixture equals the rule oracle exactly over 6 steps (%zu agents)",
                set.cells.size()));
  }
}

// ---------------------------------------------------------------------------
// Runtime invariants

std::string two_kernel_model(int steps, const std::string& transport) {
  std::string m = "<model name=\"two\">\n";
  m += "<submodel id=\"p\" dt=\"1\" total_time=\"" + std::to_string(steps) + "\" impl=\"p\">\n";
  m += "  <port name=\"out\" direction=\"out\" operator=\"O_I\" kind=\"f64-array\"/>\n";
  m += "  <port name=\"ack\" direction=\"in\" operator=\"B\" kind=\"f64-array\"/>\n";
  m += "</submodel>\n";
  m += "<submodel id=\"c\" dt=\"1\" total_time=\"" + std::to_string(steps) + "\" impl=\"c\">\n";
  m += "  <port name=\"in\" direction=\"in\" operator=\"B\" kind=\"f64-array\"/>\n";
  m += "  <port name=\"ack\" direction=\"out\" operator=\"O_I\" kind=\"f64-array\"/>\n";
  m += "</submodel>\n";
  m += "<conduit id=\"pc\" from=\"p.out\" to=\"c.in\" transport=\"" + transport + "\"/>\n";
  m += "<conduit id=\"cp\" from=\"c.ack\" to=\"p.ack\" transport=\"" + transport + "\"/>\n";
  m += "</model>\n";
  return m;
}

void runtime_invariants(Criterion& c) {
  using namespace runtime;
  using mml::Payload;
  std::mt19937 rng(77);
  int bad_order = 0, bad_conservation = 0;
  const int trials = 12;
  for (int trial = 0; trial < trials; ++trial) {
    const int steps = 1 + static_cast<int>(rng() % 25);
    const bool tcp = trial % 3 == 2;
    auto model = mml::parse_xmml(two_kernel_model(steps, tcp ? "tcp" : "inproc"));
    KernelRegistry reg;
    const std::size_t len = 1 + rng() % 20000;
    reg.register_kernel("p", KernelCallbacks{.o_i =
                                                 [len](KernelContext& ctx) {
                                                   ctx.send("out", Payload::f64_array(std::vector<double>(
                                                                       len, double(ctx.iteration()))));
                                                 },
                                             .b = [](KernelContext& ctx) { ctx.receive("ack"); }});
    reg.register_kernel("c", KernelCallbacks{.o_i = [](KernelContext& ctx) { ctx.send("ack", Payload::f64_array({0})); },
                                             .b = [](KernelContext& ctx) { ctx.receive("in"); }});
    auto deploy = tcp ? parse_deployment("p=a,c=b") : single_site(model);
    const auto r = run(build_plan(model, deploy, reg), model, reg);
    for (const auto& [k, trace] : r.traces) bad_order += !legal_phase_order(trace);
    std::map<std::string, std::vector<std::uint64_t>> per_conduit;
    for (const auto& m : r.messages) per_conduit[m.conduit].push_back(m.iteration);
    for (const auto* cd : {"pc", "cp"}) {
      const auto& its = per_conduit[cd];
      bool ok = its.size() == static_cast<std::size_t>(steps);
      for (std::size_t i = 0; ok && i < its.size(); ++i) ok = its[i] == i;
      bad_conservation += !ok;
    }
  }
  c.check(bad_order == 0, fmt("legal phase order in %d random cyclic runs (%d violations)", trials, bad_order));
  c.check(bad_conservation == 0, fmt("every sent message delivered once, in order (%d violations)", bad_conservation));

  auto model = mml::parse_xmml(two_kernel_model(3, "inproc"));
  KernelRegistry reg;
  reg.register_kernel("p", KernelCallbacks{.b = [](KernelContext& ctx) { ctx.receive("ack"); }});
  reg.register_kernel("c", KernelCallbacks{.b = [](KernelContext& ctx) { ctx.receive("in"); }});
  RunOptions opts;
  opts.watchdog = 10s;
  const auto t0 = Clock::now();
  std::string outcome = "no error";
  try {
    run(build_plan(model, single_site(model), reg), model, reg, opts);
  } catch (const DeadlockError& e) {
    outcome = fmt("DeadlockError with %zu blocked kernels", e.blocked().size());
  } catch (const std::exception& e) {
    outcome = e.what();
  }
  const double took = seconds_since(t0);
  c.check(outcome.rfind("DeadlockError", 0) == 0 && took < 10.0,
          fmt("miswired cycle: %s after %.2f s (< 10 s watchdog)", outcome.c_str(), took));
  c.note("absolute runtimes and full-scale problem sizes are out of scope at desk scale");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"efficiency arithmetic", efficiency_arithmetic},
      {"coupling overhead band (hemo ms, RTT 11 ms, interval 100, 5 ms fine steps)", overhead_band},
      {"double-mapping usage and inflation", double_mapping},
      {"ISR coupling pattern per macro-iteration", coupling_pattern},
      {"transport bit-exactness and relay failure", transport_bit_exact},
      {"solver oracles", solver_oracles},
      {"runtime invariants (phase order, conservation, deadlock watchdog)", runtime_invariants},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c(criteria[i].first);
    const auto t0 = Clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("unexpected exception: ") + e.what());
    }
    c.print(static_cast<int>(i + 1), seconds_since(t0));
    failed += !c.passed();
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
