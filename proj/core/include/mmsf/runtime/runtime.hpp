#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmsf/mml/model.hpp"
#include "mmsf/perf/perf.hpp"
#include "mmsf/runtime/kernel.hpp"
#include "mmsf/runtime/plan.hpp"
#include "mmsf/transport/channel.hpp"
#include "mmsf/transport/shaper.hpp"

namespace mmsf::runtime {

class DeadlockError : public Error {
 public:
  explicit DeadlockError(std::vector<std::string> blocked);
  // "kernel: what it waits on", sorted by kernel id.
  const std::vector<std::string>& blocked() const { return blocked_; }

 private:
  std::vector<std::string> blocked_;
};

struct RunOptions {
  std::string scenario;
  std::uint64_t seed = 0;
  // Per-kernel parameters, merged over `params` for that kernel.
  Params params;
  std::map<std::string, Params> kernel_params;
  // Replaces ceil(T/dt) for the named submodels.
  std::map<std::string, std::uint64_t> step_overrides;

  transport::StreamConfig streams;
  // Relays chained on relayed conduits.
  int relay_hops = 1;
  // Applied to the sending side of every cross-site conduit.
  std::optional<transport::LinkShape> link_shape;
  // Compute samples of kernels on a site are multiplied by its factor.
  std::map<std::string, double> speed_factors;

  std::chrono::milliseconds deadlock_poll{5};
  std::chrono::milliseconds watchdog{10000};

  std::string output_dir;
  std::optional<std::string> critical_kernel;
  std::optional<std::int64_t> baseline_wall_ns;
  std::optional<double> usage_pct;
};

struct MessageRecord {
  std::string conduit;
  mml::Endpoint from;
  mml::Endpoint to;
  std::uint64_t iteration = 0;
  mml::PayloadKind sent_kind = mml::PayloadKind::kOpaqueBytes;
  mml::PayloadKind kind = mml::PayloadKind::kOpaqueBytes;  // as delivered, after any mapper
  std::size_t bytes = 0;
  std::uint64_t hash = 0;  // FNV-1a of the delivered payload encoding
  std::int64_t sent_at_ns = 0;
  std::int64_t delivered_at_ns = 0;
};

// One line per record, in delivery order; timestamps excluded. A mapped
// message shows its kind as "sent>delivered".
std::string format_message_log(const std::vector<MessageRecord>& log);

struct RunResult {
  perf::PerfReport report;
  std::vector<perf::PhaseSample> samples;
  std::vector<MessageRecord> messages;
  std::map<std::string, std::vector<OperatorPhase>> traces;
  std::map<std::string, std::map<std::string, std::vector<double>>> outputs;
  std::int64_t wall_ns = 0;
};

// Executes the plan. Throws KernelError, DeadlockError or
// transport::TransportError; on failure all kernels are cancelled first.
RunResult run(const ExecutionPlan& plan, const mml::ModelDescription& model, const KernelRegistry& registry,
              const RunOptions& options = {});

// True if `trace` is one or more lifetimes F_INIT (O_I S B)* O_F.
bool legal_phase_order(const std::vector<OperatorPhase>& trace);

}  // namespace mmsf::runtime
