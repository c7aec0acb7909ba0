#include "mmsf/perf/perf.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include <json.hpp>

namespace mmsf::perf {

std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::kCompute: return "compute";
    case SampleKind::kCouplingWait: return "coupling_wait";
    case SampleKind::kCouplingIo: return "coupling_io";
  }
  return "?";
}

void Recorder::Buffer::record(const PhaseSample& sample) {
  std::lock_guard lock(mu_);
  samples_.push_back(sample);
}

Recorder::Buffer& Recorder::buffer(const std::string& kernel) {
  std::lock_guard lock(mu_);
  auto& slot = buffers_[kernel];
  if (!slot) slot = std::make_unique<Buffer>();
  return *slot;
}

std::vector<PhaseSample> Recorder::samples() const {
  std::lock_guard lock(mu_);
  std::vector<PhaseSample> out;
  for (const auto& [id, buf] : buffers_) {
    std::lock_guard inner(buf->mu_);
    out.insert(out.end(), buf->samples_.begin(), buf->samples_.end());
  }
  return out;
}

const KernelTotals* PerfReport::find(std::string_view kernel) const {
  for (const auto& k : kernels) {
    if (k.id == kernel) return &k;
  }
  return nullptr;
}

PerfReport aggregate(std::span<const PhaseSample> samples, std::int64_t wall_ns,
                     const AggregateOptions& options) {
  std::map<std::string, KernelTotals> by_kernel;
  for (const auto& s : samples) {
    auto& t = by_kernel[s.kernel];
    t.id = s.kernel;
    ++t.samples;
    switch (s.kind) {
      case SampleKind::kCompute: t.compute_ns += s.duration_ns; break;
      case SampleKind::kCouplingWait: t.coupling_wait_ns += s.duration_ns; break;
      case SampleKind::kCouplingIo: t.coupling_io_ns += s.duration_ns; break;
    }
  }

  PerfReport report;
  report.scenario = options.scenario;
  report.generated_at = options.generated_at;
  report.wall_ns = wall_ns;
  report.usage_pct = options.usage_pct;
  for (auto& [id, t] : by_kernel) report.kernels.push_back(t);

  if (options.critical_kernel) {
    report.critical_kernel = *options.critical_kernel;
  } else if (!report.kernels.empty()) {
    auto it = std::max_element(report.kernels.begin(), report.kernels.end(),
                               [](const auto& a, const auto& b) { return a.compute_ns < b.compute_ns; });
    report.critical_kernel = it->id;
  }
  if (const auto* k = report.find(report.critical_kernel)) report.coupling_ns = k->coupling_ns();
  report.overhead = wall_ns > 0 ? static_cast<double>(report.coupling_ns) / static_cast<double>(wall_ns) : 0.0;
  if (options.baseline_wall_ns && wall_ns > 0) {
    report.efficiency = efficiency(static_cast<double>(*options.baseline_wall_ns), static_cast<double>(wall_ns));
  }
  return report;
}

double coupling_overhead(const PerfReport& report) {
  if (report.wall_ns <= 0) throw ZeroWallTime();
  return static_cast<double>(report.coupling_ns) / static_cast<double>(report.wall_ns);
}

double efficiency(double total_single_scale, double total_multiscale) {
  if (!(total_single_scale > 0.0) || !(total_multiscale > 0.0)) {
    throw std::domain_error("efficiency needs positive single-scale and multiscale totals");
  }
  return total_single_scale / total_multiscale;
}

namespace {

using Json = nlohmann::ordered_json;

std::string seconds(std::int64_t ns) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(ns) * 1e-9);
  return buf;
}

std::string percent(std::optional<double> fraction_or_pct, bool already_pct) {
  if (!fraction_or_pct) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", already_pct ? *fraction_or_pct : *fraction_or_pct * 100.0);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s + " ";
  std::string fill(width - s.size(), ' ');
  return (left ? s + fill : fill + s) + " ";
}

constexpr std::size_t kNameWidth = 16;
constexpr std::size_t kNumWidth = 12;

std::string table_header() {
  return pad("scenario", kNameWidth, true) + pad("kernel", kNameWidth, true) + pad("compute_s", kNumWidth) +
         pad("coupling_s", kNumWidth) + pad("total_s", kNumWidth) + pad("usage_%", kNumWidth) +
         pad("overhead_%", kNumWidth) + pad("efficiency_%", kNumWidth) + "\n";
}

std::string table_rows(const PerfReport& r) {
  std::string out;
  for (const auto& k : r.kernels) {
    std::string line = pad(r.scenario.empty() ? "-" : r.scenario, kNameWidth, true) +
                       pad(k.id + (k.id == r.critical_kernel ? "*" : ""), kNameWidth, true) +
                       pad(seconds(k.compute_ns), kNumWidth) + pad(seconds(k.coupling_ns()), kNumWidth) +
                       pad(seconds(r.wall_ns), kNumWidth) + pad(percent(r.usage_pct, true), kNumWidth) +
                       pad(percent(r.overhead, false), kNumWidth) + pad(percent(r.efficiency, false), kNumWidth);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string render_table(std::span<const PerfReport> reports) {
  std::string out = table_header();
  while (out.size() > 1 && out[out.size() - 2] == ' ') out.erase(out.size() - 2, 1);
  for (const auto& r : reports) out += table_rows(r);
  return out;
}

std::string render_report(const PerfReport& report, ReportFormat format) {
  if (format == ReportFormat::kTable) return render_table(std::span(&report, 1));
  Json j;
  j["scenario"] = report.scenario;
  j["generated_at"] = report.generated_at;
  j["critical_kernel"] = report.critical_kernel;
  j["kernels"] = Json::array();
  for (const auto& k : report.kernels) {
    j["kernels"].push_back({{"id", k.id},
                            {"compute_ns", k.compute_ns},
                            {"coupling_wait_ns", k.coupling_wait_ns},
                            {"coupling_io_ns", k.coupling_io_ns},
                            {"samples", k.samples}});
  }
  j["coupling_ns"] = report.coupling_ns;
  j["wall_ns"] = report.wall_ns;
  j["usage_pct"] = optional_json(report.usage_pct);
  j["overhead"] = report.overhead;
  j["efficiency"] = optional_json(report.efficiency);
  return j.dump(2) + "\n";
}

PerfReport parse_report_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report json: ") + e.what());
  }
  try {
    PerfReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.generated_at = j.value("generated_at", std::string{});
    r.critical_kernel = j.value("critical_kernel", std::string{});
    for (const auto& k : j.at("kernels")) {
      r.kernels.push_back({k.at("id").get<std::string>(), k.at("compute_ns").get<std::int64_t>(),
                           k.at("coupling_wait_ns").get<std::int64_t>(), k.at("coupling_io_ns").get<std::int64_t>(),
                           k.at("samples").get<std::uint64_t>()});
    }
    r.coupling_ns = j.at("coupling_ns").get<std::int64_t>();
    r.wall_ns = j.at("wall_ns").get<std::int64_t>();
    if (!j.at("usage_pct").is_null()) r.usage_pct = j.at("usage_pct").get<double>();
    r.overhead = j.at("overhead").get<double>();
    if (!j.at("efficiency").is_null()) r.efficiency = j.at("efficiency").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("report json does not match the schema: ") + e.what());
  }
}

std::string wall_clock_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mmsf::perf
