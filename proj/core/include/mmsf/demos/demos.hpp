#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/mml/model.hpp"
#include "mmsf/resman/resman.hpp"
#include "mmsf/runtime/kernel.hpp"
#include "mmsf/runtime/plan.hpp"
#include "mmsf/runtime/runtime.hpp"

// Built-in demo applications: a pipeline, an in-stent restenosis loop (isr)
// and a fine/coarse arterial flow pair (hemo).
namespace mmsf::demos {

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error("config line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// "key = value" lines, '#' starts a comment. Later keys override earlier ones
// only across files; a key repeated within one text is an error.
using Config = runtime::Params;
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);
// `over` wins.
Config merge(Config base, const Config& over);

// Shipped model descriptions (identical to fixtures/isr.xmml and
// fixtures/hemo.xmml).
std::string_view isr_model_xml();
std::string_view hemo_model_xml();
// Fine kernel alone, for single-scale hemo runs.
std::string_view hemo_ss_model_xml();

// Shared by co-mapped ISR instances in live double-mapping. The BF kernel of
// every instance holds `guard` for its whole lifetime and reports its window.
struct DoubleMapSlot {
  std::shared_ptr<resman::LiveSignalGuard> guard;
  std::string instance;
  std::chrono::steady_clock::time_point epoch;
  int cores = 1;

  struct Window {
    double wait_start = 0;  // seconds since epoch
    double start = 0;
    double end = 0;
  };
  std::shared_ptr<std::mutex> mu = std::make_shared<std::mutex>();
  std::shared_ptr<std::vector<Window>> windows = std::make_shared<std::vector<Window>>();
};

// "source"/"sink" (pipeline), "isr.smc", "isr.itf", "isr.bf", "isr.dd",
// "hemo.fine", "hemo.coarse".
void register_builtin_kernels(runtime::KernelRegistry& registry, std::shared_ptr<DoubleMapSlot> slot = nullptr);
runtime::KernelRegistry builtin_registry(std::shared_ptr<DoubleMapSlot> slot = nullptr);

// ---------------------------------------------------------------------------
// Run directories

// MMSF_RUN_DIR if set, else "runs" under the working directory.
std::filesystem::path default_run_root();
// A fresh directory root/<prefix>-<n> with the smallest unused n. Never reuses
// an existing directory.
std::filesystem::path create_run_dir(const std::filesystem::path& root, const std::string& prefix);

// report.json, report.txt, messages.log and outputs.csv; snapshots/ is filled
// by the kernels themselves.
void write_run_artifacts(const std::filesystem::path& dir, const runtime::RunResult& result);

// ---------------------------------------------------------------------------
// Demo drivers

struct IsrOptions {
  int iterations = 3;
  std::uint64_t seed = 1;
  runtime::Deployment deployment;  // empty: everything on one site
  runtime::RunOptions run;         // transport and timing knobs
  Config config;                   // kernel parameters, see README
};

struct Prepared {
  mml::ModelDescription model;
  runtime::ExecutionPlan plan;
  runtime::RunOptions options;
};

Prepared prepare_isr(const IsrOptions& options, const runtime::KernelRegistry& registry);
runtime::RunResult run_isr(const IsrOptions& options, const std::filesystem::path& run_dir = {},
                           std::shared_ptr<DoubleMapSlot> slot = nullptr);

// Per macro-iteration message log grouped by iteration: SMC's k-th send and
// everything it causes. Throws Error if the log does not decompose into
// complete macro-iterations.
struct MacroIteration {
  std::vector<runtime::MessageRecord> messages;
};
std::vector<MacroIteration> group_isr_log(const std::vector<runtime::MessageRecord>& log);

struct DoubleMapResult {
  std::vector<runtime::RunResult> runs;
  std::vector<std::filesystem::path> run_dirs;
  resman::UsageReport usage;
};

// `instances` ISR runs sharing one emulated reservation of `cores` cores;
// their BF sections are serialized by a live signal guard. With a root, each
// run gets its own directory and usage.txt goes into root.
DoubleMapResult run_isr_double_mapped(const IsrOptions& options, int instances, int cores,
                                      const std::filesystem::path& root = {});

enum class HemoMode { kSingleScale, kMultiscale };

struct HemoOptions {
  HemoMode mode = HemoMode::kMultiscale;
  int interval = 100;       // fine steps per coarse step
  int fine_steps = 400;
  std::uint64_t seed = 1;
  // Round trip imposed on the cross-site link; 0 leaves it unshaped.
  double rtt_ms = 0.0;
  bool cores_emulated = false;  // apply speed.<site> factors from the config
  runtime::Deployment deployment;  // default: fine=hpc, coarse=local
  runtime::RunOptions run;
  Config config;
};

// Keys of the constant outlet pressures (mmHg) read in single-scale mode.
std::string outlet_pressure_key(std::size_t outlet);
Config default_hemo_config();

Prepared prepare_hemo(const HemoOptions& options, const runtime::KernelRegistry& registry);
runtime::RunResult run_hemo(const HemoOptions& options, const std::filesystem::path& run_dir = {});

}  // namespace mmsf::demos
