#include <cstdlib>
#include <fstream>

#include "mmsf/demos/demos.hpp"
#include "mmsf/perf/perf.hpp"

namespace mmsf::demos {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

std::filesystem::path default_run_root() {
  if (const char* env = std::getenv("MMSF_RUN_DIR"); env && *env) return env;
  return "runs";
}

std::filesystem::path create_run_dir(const std::filesystem::path& root, const std::string& prefix) {
  std::filesystem::create_directories(root);
  for (int n = 1;; ++n) {
    auto dir = root / (prefix + "-" + std::to_string(n));
    // create_directory is atomic: false means someone else owns it.
    if (std::filesystem::create_directory(dir)) {
      std::filesystem::create_directory(dir / "snapshots");
      return dir;
    }
  }
}

void write_run_artifacts(const std::filesystem::path& dir, const runtime::RunResult& result) {
  write_text(dir / "report.json", perf::render_report(result.report, perf::ReportFormat::kJson));
  write_text(dir / "report.txt", perf::render_report(result.report, perf::ReportFormat::kTable));
  write_text(dir / "messages.log", runtime::format_message_log(result.messages));
  std::string csv = "kernel,output,index,value\n";
  for (const auto& [kernel, outputs] : result.outputs) {
    for (const auto& [name, values] : outputs) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        csv += kernel + "," + name + "," + std::to_string(i) + "," + buf + "\n";
      }
    }
  }
  write_text(dir / "outputs.csv", csv);
}

}  // namespace mmsf::demos
