#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef MMSF_CLI_PATH
#define MMSF_CLI_PATH "mmsf"
#endif

namespace {

std::string fixture(const std::string& name) { return std::string(MMSF_FIXTURE_DIR) + "/" + name; }

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome mmsf(const std::string& args) {
  const std::string cmd = std::string(MMSF_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) o.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mmsf-test-cli-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validate exit codes") {
  CHECK(mmsf("validate " + fixture("isr.xmml")).code == 0);
  CHECK(mmsf("validate " + fixture("hemo.xmml")).code == 0);
  auto truncated = mmsf("validate " + fixture("invalid/truncated.xmml"));
  CHECK(truncated.code == 2);
  CHECK(truncated.out.find("line") != std::string::npos);
  auto mismatch = mmsf("validate " + fixture("invalid/payload-mismatch.xmml"));
  CHECK(mismatch.code == 1);
  CHECK(std::count(mismatch.out.begin(), mismatch.out.end(), '\n') == 1);
  CHECK(mmsf("validate " + fixture("invalid/unfed.xmml")).code == 1);
}

TEST_CASE("plan reports plan errors with exit 3") {
  auto ok = mmsf("plan " + fixture("hemo.xmml") + " --deploy " + fixture("hemo.deploy"));
  CHECK(ok.code == 0);
  CHECK(ok.out.find("tcp") != std::string::npos);
  CHECK(mmsf("plan " + fixture("hemo.xmml") + " --deploy fine=hpc").code == 3);
  auto ssm = mmsf("plan " + fixture("isr.xmml") + " --ssm");
  CHECK(ssm.code == 0);
  CHECK(ssm.out.find("digraph") != std::string::npos);
}

TEST_CASE("sched prints one row per scenario") {
  auto r = mmsf("sched " + fixture("huygens.sched") + " " + fixture("huygens-double.sched"));
  CHECK(r.code == 0);
  CHECK(r.out.find("28.77") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
  auto empty = mmsf("sched " + fixture("empty.sched"));
  CHECK(empty.code == 0);
  CHECK(std::count(empty.out.begin(), empty.out.end(), '\n') == 1);
  const auto bad = scratch("bad.sched");
  std::ofstream(bad) << "resource m cores=4\nnonsense\n";
  auto parse = mmsf("sched " + bad.string());
  CHECK(parse.code == 2);
  CHECK(parse.out.find("line 2") != std::string::npos);
}

TEST_CASE("run writes a run directory that report can render") {
  const auto root = scratch("run");
  auto r = mmsf("run " + fixture("pipeline.xmml") + " --out " + root.string());
  REQUIRE(r.code == 0);
  const auto dir = root / "pipeline-1";
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 3);
  auto rep = mmsf("report " + dir.string());
  CHECK(rep.code == 0);
  CHECK(rep.out.find("source") != std::string::npos);
  CHECK(mmsf("report " + dir.string() + " --format json").out.find("\"kernels\"") != std::string::npos);

  // Reruns never overwrite; identical seeds in sequenced mode give identical logs.
  REQUIRE(mmsf("run " + fixture("pipeline.xmml") + " --out " + root.string()).code == 0);
  CHECK(slurp(root / "pipeline-1" / "messages.log") == slurp(root / "pipeline-2" / "messages.log"));
}

TEST_CASE("run maps kernel failures to exit 4") {
  const auto root = scratch("fail");
  // Pipeline sink expects 10 values; the source stops after 3 steps.
  auto r = mmsf("run " + fixture("pipeline.xmml") + " --steps source=3 --out " + root.string());
  CHECK(r.code == 4);
}

TEST_CASE("demo hemo runs a paired single-scale baseline") {
  const auto root = scratch("hemo");
  auto r = mmsf("demo hemo --interval 10 --fine-steps 40 --set hemo.nx=16 --set hemo.ny=8 --out " + root.string());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(root / "hemo-ss-1" / "report.json"));
  CHECK(std::filesystem::exists(root / "hemo-ms-1" / "report.json"));
  CHECK(slurp(root / "hemo-ms-1" / "report.json").find("\"efficiency\"") != std::string::npos);
  CHECK(mmsf("demo hemo --interval 10 --fine-steps 45 --out " + root.string()).code != 0);
  CHECK(mmsf("demo hemo --mode sideways").code == 2);
}

TEST_CASE("demo isr with double mapping writes two runs and a usage report") {
  const auto root = scratch("isr");
  auto r = mmsf("demo isr --iterations 1 --double-map 2 --out " + root.string());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(root / "isr-1" / "report.json"));
  CHECK(std::filesystem::exists(root / "isr-2" / "report.json"));
  CHECK(slurp(root / "usage.txt").find("isr-double-map-2") != std::string::npos);
}

TEST_CASE("MMSF_RUN_DIR overrides the output root") {
  const auto root = scratch("env");
  ::setenv("MMSF_RUN_DIR", root.c_str(), 1);
  auto r = mmsf("run " + fixture("minimal.xmml"));
  ::unsetenv("MMSF_RUN_DIR");
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(root / "minimal-1" / "report.txt"));
}
