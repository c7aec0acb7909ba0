#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmsf/error.hpp"
#include "mmsf/mml/model.hpp"

namespace mmsf::perf {

using mml::OperatorPhase;

enum class SampleKind { kCompute, kCouplingWait, kCouplingIo };

std::string_view to_string(SampleKind kind);

struct PhaseSample {
  std::string kernel;
  OperatorPhase phase = OperatorPhase::kS;
  SampleKind kind = SampleKind::kCompute;
  std::int64_t duration_ns = 0;
  std::uint64_t iteration = 0;
};

// Collects samples from concurrently running kernels. Each kernel writes to
// its own buffer; buffers are merged when samples() is called.
class Recorder {
 public:
  class Buffer {
   public:
    void record(const PhaseSample& sample);

   private:
    friend class Recorder;
    mutable std::mutex mu_;
    std::vector<PhaseSample> samples_;
  };

  // Stable for the recorder's lifetime.
  Buffer& buffer(const std::string& kernel);
  void record(const PhaseSample& sample) { buffer(sample.kernel).record(sample); }

  // Kernels in id order, each kernel's samples in recording order.
  std::vector<PhaseSample> samples() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Buffer>> buffers_;
};

struct KernelTotals {
  std::string id;
  std::int64_t compute_ns = 0;
  std::int64_t coupling_wait_ns = 0;
  std::int64_t coupling_io_ns = 0;
  std::uint64_t samples = 0;

  std::int64_t coupling_ns() const { return coupling_wait_ns + coupling_io_ns; }
  bool operator==(const KernelTotals&) const = default;
};

// Aggregated view of one run.
//
// coupling_ns is the coupling time of the critical kernel: the one whose
// blocking extends the run (by default the kernel with the largest compute
// total). Waits of kernels that idle while the critical one computes are
// reported per kernel but do not count as overhead.
struct PerfReport {
  std::string scenario;
  std::string generated_at;  // wall-clock provenance only
  std::string critical_kernel;
  std::vector<KernelTotals> kernels;
  std::int64_t coupling_ns = 0;
  std::int64_t wall_ns = 0;
  std::optional<double> usage_pct;
  double overhead = 0.0;
  std::optional<double> efficiency;

  const KernelTotals* find(std::string_view kernel) const;
  bool operator==(const PerfReport&) const = default;
};

struct AggregateOptions {
  std::string scenario;
  std::optional<std::string> critical_kernel;
  std::optional<double> usage_pct;
  // Total runtime of the matching single-scale run, for efficiency.
  std::optional<std::int64_t> baseline_wall_ns;
  std::string generated_at;
};

PerfReport aggregate(std::span<const PhaseSample> samples, std::int64_t wall_ns,
                     const AggregateOptions& options = {});

class ZeroWallTime : public Error {
 public:
  ZeroWallTime() : Error("coupling overhead is undefined for a zero wall time") {}
};

// coupling total / wall total.
double coupling_overhead(const PerfReport& report);

// Single-scale total over multiscale total for the same workload. Throws
// std::domain_error for non-positive inputs.
double efficiency(double total_single_scale, double total_multiscale);

enum class ReportFormat { kTable, kJson };

std::string render_report(const PerfReport& report, ReportFormat format);
// Several scenarios in one table (one header, rows per scenario and kernel).
std::string render_table(std::span<const PerfReport> reports);
PerfReport parse_report_json(std::string_view text);

// Current UTC time as ISO-8601, for the generated_at header.
std::string wall_clock_now();

}  // namespace mmsf::perf
