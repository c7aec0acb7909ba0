#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mmsf/demos/demos.hpp"
#include "mmsf/mml/analysis.hpp"
#include "mmsf/mml/xmml.hpp"
#include "mmsf/perf/perf.hpp"
#include "mmsf/resman/resman.hpp"
#include "mmsf/runtime/plan.hpp"
#include "mmsf/runtime/runtime.hpp"
#include "mmsf/transport/errors.hpp"

namespace fs = std::filesystem;
using namespace mmsf;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kIssues = 1;
constexpr int kParse = 2;
constexpr int kPlan = 3;
constexpr int kKernel = 4;
constexpr int kTransport = 5;

struct TransportFlags {
  int streams = 1;
  std::size_t chunk_size = 262144;
  int relay_hops = 1;
  double rtt_ms = 0;
};

struct RunFlags {
  std::string target;
  std::string deploy;
  std::uint64_t seed = 1;
  std::vector<std::string> config_files;
  std::vector<std::string> sets;
  std::vector<std::string> steps;
  std::string out;
  TransportFlags transport;
  // isr
  int iterations = 3;
  int double_map = 0;
  int cores = 4;
  // hemo
  std::string mode = "ms";
  int interval = 100;
  int fine_steps = 400;
  double fine_step_ms = -1;
  bool cores_emulated = false;
  std::string ss_config;
  bool no_baseline = false;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Deployment from inline "a=b,c=d" text or from a file of such lines.
runtime::Deployment load_deployment(const std::string& text) {
  if (text.empty()) return {};
  if (fs::exists(text)) return runtime::parse_deployment(read_file(text));
  return runtime::parse_deployment(text);
}

demos::Config collect_config(const RunFlags& f) {
  demos::Config config;
  for (const auto& path : f.config_files) config = demos::merge(config, demos::load_config(path));
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw demos::ConfigError(0, "--set expects key=value, got '" + kv + "'");
    config[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return config;
}

runtime::RunOptions base_options(const RunFlags& f) {
  runtime::RunOptions o;
  o.seed = f.seed;
  o.streams.streams = f.transport.streams;
  o.streams.chunk_size = f.transport.chunk_size;
  o.streams.validate();
  o.relay_hops = f.transport.relay_hops;
  if (f.transport.rtt_ms > 0) o.link_shape = transport::LinkShape{f.transport.rtt_ms / 2.0, std::nullopt};
  for (const auto& s : f.steps) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw demos::ConfigError(0, "--steps expects submodel=n, got '" + s + "'");
    o.step_overrides[s.substr(0, eq)] = std::stoull(s.substr(eq + 1));
  }
  return o;
}

fs::path output_root(const RunFlags& f) { return f.out.empty() ? demos::default_run_root() : fs::path(f.out); }

void print_run(const fs::path& dir, const runtime::RunResult& r) {
  std::cout << perf::render_report(r.report, perf::ReportFormat::kTable);
  if (!dir.empty()) std::cout << "run directory: " << dir.string() << "\n";
}

int run_isr(const RunFlags& f) {
  demos::IsrOptions o;
  o.iterations = f.iterations;
  o.seed = f.seed;
  o.deployment = load_deployment(f.deploy);
  o.run = base_options(f);
  o.config = collect_config(f);
  if (f.double_map > 0) {
    const auto root = output_root(f);
    fs::create_directories(root);
    auto result = demos::run_isr_double_mapped(o, f.double_map, f.cores, root);
    for (std::size_t i = 0; i < result.runs.size(); ++i) print_run(result.run_dirs[i], result.runs[i]);
    std::cout << resman::render_usage_table(std::span(&result.usage, 1));
    std::cout << "usage report: " << (root / "usage.txt").string() << "\n";
    return kOk;
  }
  const auto dir = demos::create_run_dir(output_root(f), "isr");
  print_run(dir, demos::run_isr(o, dir));
  return kOk;
}

int run_hemo(const RunFlags& f) {
  demos::HemoOptions o;
  if (f.mode != "ms" && f.mode != "ss") throw demos::ConfigError(0, "--mode must be ss or ms");
  o.mode = f.mode == "ms" ? demos::HemoMode::kMultiscale : demos::HemoMode::kSingleScale;
  o.interval = f.interval;
  o.fine_steps = f.fine_steps;
  o.seed = f.seed;
  o.rtt_ms = f.transport.rtt_ms;
  o.cores_emulated = f.cores_emulated;
  o.deployment = load_deployment(f.deploy);
  o.run = base_options(f);
  o.run.link_shape.reset();  // hemo applies --rtt itself
  o.config = collect_config(f);
  if (!f.ss_config.empty()) o.config = demos::merge(o.config, demos::load_config(f.ss_config));
  if (f.fine_step_ms >= 0) o.config["hemo.fine_step_ms"] = std::to_string(f.fine_step_ms);

  const auto root = output_root(f);
  if (o.mode == demos::HemoMode::kMultiscale && !f.no_baseline) {
    // Paired single-scale run with the same fine parameters, for efficiency.
    auto ss = o;
    ss.mode = demos::HemoMode::kSingleScale;
    const auto ss_dir = demos::create_run_dir(root, "hemo-ss");
    const auto baseline = demos::run_hemo(ss, ss_dir);
    print_run(ss_dir, baseline);
    o.run.baseline_wall_ns = baseline.wall_ns;
  }
  const auto dir = demos::create_run_dir(root, o.mode == demos::HemoMode::kMultiscale ? "hemo-ms" : "hemo-ss");
  print_run(dir, demos::run_hemo(o, dir));
  return kOk;
}

int run_model(const RunFlags& f) {
  const auto model = mml::load_xmml(f.target);
  if (auto issues = mml::validate(model); !issues.empty()) {
    for (const auto& i : issues) std::cerr << i.rule << " " << i.subject << ": " << i.message << "\n";
    return kIssues;
  }
  const auto registry = demos::builtin_registry();
  const auto deployment = f.deploy.empty() ? runtime::single_site(model) : load_deployment(f.deploy);
  const auto plan = runtime::build_plan(model, deployment, registry);
  auto options = base_options(f);
  options.params = collect_config(f);
  const auto dir = demos::create_run_dir(output_root(f), model.name);
  options.output_dir = dir.string();
  const auto result = runtime::run(plan, model, registry, options);
  demos::write_run_artifacts(dir, result);
  print_run(dir, result);
  return kOk;
}

int cmd_run(const RunFlags& f) {
  if (f.target == "isr") return run_isr(f);
  if (f.target == "hemo") return run_hemo(f);
  return run_model(f);
}

int cmd_validate(const std::string& path) {
  const auto model = mml::load_xmml(path);
  const auto issues = mml::validate(model);
  for (const auto& i : issues) std::cout << i.rule << " " << i.subject << ": " << i.message << "\n";
  if (!issues.empty()) return kIssues;
  std::cout << model.name << ": ok (" << model.submodels.size() << " submodels, " << model.conduits.size()
            << " conduits)\n";
  return kOk;
}

int cmd_plan(const std::string& path, const std::string& deploy, bool dot) {
  const auto model = mml::load_xmml(path);
  if (auto issues = mml::validate(model); !issues.empty()) {
    for (const auto& i : issues) std::cerr << i.rule << " " << i.subject << ": " << i.message << "\n";
    return kIssues;
  }
  if (dot) {
    std::cout << mml::emit_ssm(model);
    return kOk;
  }
  const auto registry = demos::builtin_registry();
  const auto deployment = deploy.empty() ? runtime::single_site(model) : load_deployment(deploy);
  std::cout << runtime::describe_plan(model, runtime::build_plan(model, deployment, registry));
  return kOk;
}

int cmd_sched(const std::vector<std::string>& paths) {
  std::vector<resman::UsageReport> reports;
  for (const auto& p : paths) {
    for (const auto& sc : resman::load_scenarios(p)) reports.push_back(sc.simulate().report);
  }
  std::cout << resman::render_usage_table(reports);
  return kOk;
}

int cmd_report(const std::string& dir, const std::string& format) {
  fs::path path = dir;
  if (fs::is_directory(path)) path /= "report.json";
  const auto report = perf::parse_report_json(read_file(path));
  std::cout << perf::render_report(report, format == "json" ? perf::ReportFormat::kJson : perf::ReportFormat::kTable);
  return kOk;
}

void add_transport_flags(CLI::App* cmd, TransportFlags& t) {
  cmd->add_option("--streams,-k", t.streams, "Parallel TCP streams per cross-site conduit")->check(CLI::Range(1, 64));
  cmd->add_option("--chunk-size", t.chunk_size, "Chunk size in bytes")->check(CLI::Range(4096, 1 << 30));
  cmd->add_option("--relay-hops", t.relay_hops, "Relays chained on relayed conduits")->check(CLI::Range(1, 8));
  cmd->add_option("--rtt", t.rtt_ms, "Round trip (ms) imposed on cross-site links")->check(CLI::NonNegativeNumber);
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool demo_only) {
  cmd->add_option("--seed", f.seed, "Root seed; kernels derive theirs from it");
  cmd->add_option("--deploy", f.deploy, "Placement 'submodel=site,...' or a file of such lines");
  cmd->add_option("--config", f.config_files, "key = value parameter file (repeatable)");
  cmd->add_option("--set", f.sets, "Single parameter override key=value (repeatable)");
  cmd->add_option("--out", f.out, "Root for run directories (default $MMSF_RUN_DIR or ./runs)");
  if (!demo_only) cmd->add_option("--steps", f.steps, "Step override submodel=n (repeatable)");
  add_transport_flags(cmd, f.transport);
  cmd->add_option("--iterations", f.iterations, "isr: macro-iterations")->check(CLI::NonNegativeNumber);
  cmd->add_option("--double-map", f.double_map, "isr: instances sharing one reservation")->check(CLI::Range(0, 16));
  cmd->add_option("--cores", f.cores, "isr: cores of the emulated reservation")->check(CLI::Range(1, 4096));
  cmd->add_option("--mode", f.mode, "hemo: ss (single-scale) or ms (multiscale)")->check(CLI::IsMember({"ss", "ms"}));
  cmd->add_option("--interval", f.interval, "hemo: fine steps per coarse step")->check(CLI::PositiveNumber);
  cmd->add_option("--fine-steps", f.fine_steps, "hemo: fine steps")->check(CLI::NonNegativeNumber);
  cmd->add_option("--fine-step-ms", f.fine_step_ms, "hemo: pad each fine step to this many ms");
  cmd->add_flag("--cores-emulated", f.cores_emulated, "hemo: scale compute by the speed.<site> factors");
  cmd->add_option("--ss-config", f.ss_config, "hemo: constant outlet pressures for single-scale mode");
  cmd->add_flag("--no-baseline", f.no_baseline, "hemo: skip the paired single-scale run");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmsf: describe, plan and run coupled multiscale simulations"};
  app.require_subcommand(1);

  std::string path, deploy, format = "table";
  bool dot = false;
  auto* validate = app.add_subcommand("validate", "Check an xMML model; exit 1 on issues, 2 on parse errors");
  validate->add_option("model", path, "xMML file")->required();

  auto* plan = app.add_subcommand("plan", "Show the execution plan for a model and deployment");
  plan->add_option("model", path, "xMML file")->required();
  plan->add_option("--deploy", deploy, "Placement 'submodel=site,...' or a file of such lines");
  plan->add_flag("--ssm", dot, "Print the scale separation map (DOT) instead");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run a model file, or the built-in 'isr' / 'hemo' demo");
  run->add_option("target", run_flags.target, "xMML file, isr or hemo")->required();
  add_run_flags(run, run_flags, false);

  RunFlags demo_flags;
  auto* demo = app.add_subcommand("demo", "Run a built-in demo (same flags as run)");
  demo->add_option("name", demo_flags.target, "isr or hemo")->required()->check(CLI::IsMember({"isr", "hemo"}));
  add_run_flags(demo, demo_flags, true);

  std::vector<std::string> scenarios;
  auto* sched = app.add_subcommand("sched", "Simulate reservation scenarios and print the usage table");
  sched->add_option("scenarios", scenarios, "Scenario files")->required();

  auto* report = app.add_subcommand("report", "Render the report of a run directory");
  report->add_option("run-dir", path, "Run directory or report.json")->required();
  report->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParse;
  }

  try {
    if (*validate) return cmd_validate(path);
    if (*plan) return cmd_plan(path, deploy, dot);
    if (*run) return cmd_run(run_flags);
    if (*demo) return cmd_run(demo_flags);
    if (*sched) return cmd_sched(scenarios);
    if (*report) return cmd_report(path, format);
  } catch (const mml::SyntaxError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const mml::SchemaError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const resman::ScenarioError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const demos::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kParse;
  } catch (const runtime::PlanError& e) {
    std::cerr << "plan error: " << e.what() << "\n";
    return kPlan;
  } catch (const runtime::KernelError& e) {
    std::cerr << "kernel error: " << e.what() << "\n";
    return kKernel;
  } catch (const runtime::DeadlockError& e) {
    std::cerr << "kernel error: " << e.what() << "\n";
    return kKernel;
  } catch (const transport::TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIssues;
  }
  return kOk;
}
