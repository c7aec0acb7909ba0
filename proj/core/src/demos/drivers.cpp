#include <algorithm>
#include <fstream>
#include <thread>

#include "mmsf/demos/demos.hpp"
#include "mmsf/mml/xmml.hpp"

namespace mmsf::demos {
namespace {

using Clock = std::chrono::steady_clock;

runtime::RunResult execute(const Prepared& p, const runtime::KernelRegistry& registry,
                           const std::filesystem::path& run_dir) {
  auto options = p.options;
  if (!run_dir.empty()) options.output_dir = run_dir.string();
  auto result = runtime::run(p.plan, p.model, registry, options);
  if (!run_dir.empty()) write_run_artifacts(run_dir, result);
  return result;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// [from, to) minus the sorted, disjoint `holes`.
std::vector<std::pair<double, double>> subtract(double from, double to,
                                                const std::vector<std::pair<double, double>>& holes) {
  std::vector<std::pair<double, double>> out;
  double cursor = from;
  for (const auto& [a, b] : holes) {
    if (b <= cursor) continue;
    if (a > cursor) out.emplace_back(cursor, std::min(a, to));
    cursor = std::max(cursor, b);
    if (cursor >= to) break;
  }
  if (cursor < to) out.emplace_back(cursor, to);
  return out;
}

}  // namespace

Prepared prepare_isr(const IsrOptions& options, const runtime::KernelRegistry& registry) {
  if (options.iterations < 0) throw Error("isr: iterations must be non-negative");
  Prepared p;
  p.model = mml::parse_xmml(isr_model_xml());
  const auto deployment = options.deployment.empty() ? runtime::single_site(p.model) : options.deployment;
  p.plan = runtime::build_plan(p.model, deployment, registry);
  p.options = options.run;
  p.options.seed = options.seed;
  p.options.scenario = p.options.scenario.empty() ? "isr" : p.options.scenario;
  p.options.params = merge(p.options.params, options.config);
  p.options.step_overrides["SMC"] = static_cast<std::uint64_t>(options.iterations);
  return p;
}

runtime::RunResult run_isr(const IsrOptions& options, const std::filesystem::path& run_dir,
                           std::shared_ptr<DoubleMapSlot> slot) {
  const auto registry = builtin_registry(std::move(slot));
  return execute(prepare_isr(options, registry), registry, run_dir);
}

std::vector<MacroIteration> group_isr_log(const std::vector<runtime::MessageRecord>& log) {
  // Conduit iteration numbers count per conduit, so the k-th message on every
  // conduit belongs to macro-iteration k.
  std::vector<MacroIteration> out;
  for (const auto& m : log) {
    if (m.iteration >= out.size()) out.resize(m.iteration + 1);
    out[m.iteration].messages.push_back(m);
  }
  auto find = [](const MacroIteration& it, const std::string& conduit) -> const runtime::MessageRecord* {
    for (const auto& m : it.messages) {
      if (m.conduit == conduit) return &m;
    }
    return nullptr;
  };
  // Causal order inside a macro-iteration: a message is sent only after the
  // message that triggered it was delivered.
  const std::vector<std::pair<std::string, std::string>> causes{
      {"smc_itf", "itf_bf"}, {"smc_itf", "itf_dd"}, {"itf_bf", "bf_smc"}, {"itf_dd", "dd_smc"}};
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (const auto& [cause, effect] : causes) {
      const auto* c = find(out[k], cause);
      const auto* e = find(out[k], effect);
      if (e && !c) throw Error("macro-iteration " + std::to_string(k) + ": " + effect + " without " + cause);
      if (c && e && e->sent_at_ns < c->delivered_at_ns) {
        throw Error("macro-iteration " + std::to_string(k) + ": " + effect + " sent before " + cause + " arrived");
      }
    }
  }
  return out;
}

DoubleMapResult run_isr_double_mapped(const IsrOptions& options, int instances, int cores,
                                      const std::filesystem::path& root) {
  if (instances < 1) throw Error("double-map needs at least one instance");
  if (cores < 1) throw Error("double-map needs at least one core");
  auto guard = std::make_shared<resman::LiveSignalGuard>("isr-reservation");
  const auto epoch = Clock::now();

  DoubleMapResult out;
  std::vector<std::shared_ptr<DoubleMapSlot>> slots;
  for (int i = 0; i < instances; ++i) {
    auto slot = std::make_shared<DoubleMapSlot>();
    slot->guard = guard;
    slot->instance = "isr-" + std::to_string(i + 1);
    slot->epoch = epoch;
    slot->cores = cores;
    slots.push_back(slot);
    if (!root.empty()) out.run_dirs.push_back(create_run_dir(root, "isr"));
  }

  std::vector<runtime::RunResult> results(instances);
  std::vector<std::pair<double, double>> lifetimes(instances);
  std::vector<std::exception_ptr> errors(instances);
  std::vector<std::thread> threads;
  for (int i = 0; i < instances; ++i) {
    threads.emplace_back([&, i] {
      auto since = [&] { return std::chrono::duration<double>(Clock::now() - epoch).count(); };
      lifetimes[i].first = since();
      try {
        results[i] = run_isr(options, out.run_dirs.empty() ? std::filesystem::path{} : out.run_dirs[i], slots[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      lifetimes[i].second = since();
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.runs = std::move(results);

  // Same accounting as the simulator: guarded windows on all cores, the rest
  // of each instance's lifetime on one core, guard waits idle.
  resman::ReservationBook book;
  book.add_resource({"desk", cores, {}});
  book.reserve("shared", "desk", cores, 0.0, std::nullopt);
  std::vector<resman::TimelineEntry> timeline;
  std::vector<resman::Instance> mapped;
  double bf_total = 0, serial_total = 0;
  for (int i = 0; i < instances; ++i) {
    const auto& id = slots[i]->instance;
    mapped.push_back({id, "isr", "shared"});
    auto windows = *slots[i]->windows;
    std::sort(windows.begin(), windows.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::vector<std::pair<double, double>> holes;
    int cycle = 0;
    for (const auto& w : windows) {
      if (w.start > w.wait_start) {
        timeline.push_back({id, "shared", cycle, std::string(resman::kGuardWaitPhase), w.wait_start, w.start, 0, false});
      }
      timeline.push_back({id, "shared", cycle, "bf", w.start, w.end, cores, true});
      bf_total += w.end - w.start;
      holes.emplace_back(w.wait_start, w.end);
      ++cycle;
    }
    for (const auto& [a, b] : subtract(lifetimes[i].first, lifetimes[i].second, holes)) {
      timeline.push_back({id, "shared", 0, "serial", a, b, 1, false});
      serial_total += b - a;
    }
  }
  const int cycles = std::max(1, options.iterations);
  resman::CycleProfile profile{"isr", {}};
  const double per_cycle = static_cast<double>(instances) * cycles;
  profile.phases.push_back({"bf", std::max(bf_total / per_cycle, 1e-9), cores, true});
  profile.phases.push_back({"serial", std::max(serial_total / per_cycle, 1e-9), 1, false});
  std::map<std::string, resman::CycleProfile> profiles{{"isr", profile}};
  out.usage = resman::summarize("isr-double-map-" + std::to_string(instances), timeline, book, mapped, profiles, cycles);
  if (!root.empty()) {
    std::ofstream(root / "usage.txt") << resman::render_usage_table(std::span(&out.usage, 1));
  }
  return out;
}

Config default_hemo_config() {
  Config c;
  for (std::size_t o = 0; o < 4; ++o) c[outlet_pressure_key(o)] = "90";
  c["speed.hpc"] = "0.25";
  c["speed.local"] = "1";
  return c;
}

Prepared prepare_hemo(const HemoOptions& options, const runtime::KernelRegistry& registry) {
  if (options.interval < 1) throw Error("hemo: interval must be at least 1");
  if (options.fine_steps < 0 || options.fine_steps % options.interval != 0) {
    throw Error("hemo: fine steps must be a non-negative multiple of the interval");
  }
  if (options.rtt_ms < 0) throw Error("hemo: rtt must be non-negative");
  const bool ms = options.mode == HemoMode::kMultiscale;
  Prepared p;
  p.model = mml::parse_xmml(ms ? hemo_model_xml() : hemo_ss_model_xml());
  runtime::Deployment deployment = options.deployment;
  if (deployment.empty()) {
    deployment["fine"] = "hpc";
    if (ms) deployment["coarse"] = "local";
  }
  if (!ms) deployment.erase("coarse");
  p.plan = runtime::build_plan(p.model, deployment, registry);
  p.options = options.run;
  p.options.seed = options.seed;
  if (p.options.scenario.empty()) p.options.scenario = ms ? "hemo-ms" : "hemo-ss";
  const auto config = merge(default_hemo_config(), options.config);
  p.options.params = merge(p.options.params, config);
  p.options.params["hemo.mode"] = ms ? "ms" : "ss";
  p.options.params["hemo.interval"] = std::to_string(options.interval);
  p.options.params["hemo.fine_dt"] = mml::format_number(p.model.find_submodel("fine")->scale.dt);
  p.options.step_overrides["fine"] = static_cast<std::uint64_t>(options.fine_steps);
  if (ms) {
    p.options.step_overrides["coarse"] = ceil_div(static_cast<std::uint64_t>(options.fine_steps), options.interval);
    if (options.rtt_ms > 0) p.options.link_shape = transport::LinkShape{options.rtt_ms / 2.0, std::nullopt};
  }
  if (options.cores_emulated) {
    for (const auto& [k, v] : config) {
      if (k.rfind("speed.", 0) == 0) p.options.speed_factors[k.substr(6)] = runtime::param_double(config, k, 1.0);
    }
  }
  if (!p.options.critical_kernel) p.options.critical_kernel = "fine";
  return p;
}

runtime::RunResult run_hemo(const HemoOptions& options, const std::filesystem::path& run_dir) {
  const auto registry = builtin_registry();
  return execute(prepare_hemo(options, registry), registry, run_dir);
}

}  // namespace mmsf::demos
