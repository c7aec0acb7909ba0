#include <doctest.h>

#include <chrono>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "mmsf/perf/perf.hpp"

using namespace mmsf;
using namespace mmsf::perf;

namespace {

constexpr std::int64_t kSec = 1'000'000'000;

PhaseSample sample(const std::string& kernel, SampleKind kind, std::int64_t ns, OperatorPhase phase = OperatorPhase::kS) {
  return {kernel, phase, kind, ns, 0};
}

}  // namespace

TEST_CASE("recording and aggregating trivial logs") {
  Recorder rec;
  rec.record(sample("k", SampleKind::kCompute, 5'000'000));
  auto samples = rec.samples();
  auto r = aggregate(samples, 10'000'000);
  REQUIRE(r.kernels.size() == 1);
  CHECK(r.kernels[0].compute_ns == 5'000'000);
  const auto empty = aggregate({}, 0);
  CHECK(empty.kernels.empty());
  CHECK(empty.coupling_ns == 0);
  CHECK(empty.overhead == 0.0);
  CHECK_THROWS_AS(coupling_overhead(empty), ZeroWallTime);
}

TEST_CASE("4002 exchanges of 6 ms add up to about 24 s") {
  std::vector<PhaseSample> s;
  for (int i = 0; i < 4002; ++i) s.push_back(sample("fine", SampleKind::kCouplingWait, 6'000'000, OperatorPhase::kB));
  s.push_back(sample("fine", SampleKind::kCompute, 2274 * kSec));
  const auto r = aggregate(s, 2298 * kSec);
  CHECK(r.coupling_ns / 1e9 == doctest::Approx(24.0).epsilon(0.001));
}

TEST_CASE("coupling overhead examples") {
  PerfReport r;
  r.coupling_ns = 79 * kSec;
  r.wall_ns = 3240 * kSec;
  CHECK(100 * coupling_overhead(r) == doctest::Approx(2.438).epsilon(0.001));
  r.coupling_ns = 24 * kSec;
  r.wall_ns = 2298 * kSec;
  CHECK(100 * coupling_overhead(r) == doctest::Approx(1.044).epsilon(0.001));
  r.coupling_ns = 0;
  CHECK(coupling_overhead(r) == 0.0);
}

TEST_CASE("efficiency examples and domain") {
  CHECK(100 * efficiency(2271, 2298) == doctest::Approx(98.8).epsilon(0.001));
  CHECK(100 * efficiency(862, 907) == doctest::Approx(95.0).epsilon(0.001));
  CHECK(efficiency(5, 5) == 1.0);
  CHECK_THROWS_AS(efficiency(0, 1), std::domain_error);
  CHECK_THROWS_AS(efficiency(1, -1), std::domain_error);
}

TEST_CASE("efficiency property: unit on the diagonal, strictly decreasing in the multiscale total") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(1e-3, 1e4);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), c = b * (1.0 + 1e-6 + u(rng) / 1e4);
    CHECK(efficiency(a, a) == doctest::Approx(1.0));
    CHECK(efficiency(a, c) < efficiency(a, b));
  }
}

TEST_CASE("aggregation equals a brute-force fold over the sample log") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PhaseSample> log;
    const int kernels = 1 + static_cast<int>(rng() % 4);
    const int n = static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      log.push_back({"k" + std::to_string(rng() % kernels), static_cast<OperatorPhase>(rng() % 5),
                     static_cast<SampleKind>(rng() % 3), static_cast<std::int64_t>(rng() % 1'000'000),
                     static_cast<std::uint64_t>(rng() % 10)});
    }
    const std::int64_t wall = 1 + static_cast<std::int64_t>(rng() % 100'000'000);
    const auto r = aggregate(log, wall);

    // Oracle: one pass per kernel id over the whole log.
    std::set<std::string> ids;
    for (const auto& s : log) ids.insert(s.kernel);
    REQUIRE(r.kernels.size() == ids.size());
    std::string critical;
    std::int64_t best = -1;
    for (const auto& id : ids) {
      std::int64_t c = 0, w = 0, io = 0;
      std::uint64_t count = 0;
      for (const auto& s : log) {
        if (s.kernel != id) continue;
        ++count;
        if (s.kind == SampleKind::kCompute) c += s.duration_ns;
        if (s.kind == SampleKind::kCouplingWait) w += s.duration_ns;
        if (s.kind == SampleKind::kCouplingIo) io += s.duration_ns;
      }
      const auto* k = r.find(id);
      REQUIRE(k);
      CHECK(k->compute_ns == c);
      CHECK(k->coupling_wait_ns == w);
      CHECK(k->coupling_io_ns == io);
      CHECK(k->samples == count);
      if (c > best) {
        best = c;
        critical = id;
      }
    }
    CHECK(r.critical_kernel == critical);
    if (!critical.empty()) {
      CHECK(r.coupling_ns == r.find(critical)->coupling_ns());
      CHECK(r.overhead == doctest::Approx(static_cast<double>(r.coupling_ns) / wall));
    }
  }
}

TEST_CASE("overhead monotonicity: an extra coupling sample never lowers it") {
  std::mt19937 rng(7);
  std::vector<PhaseSample> log{sample("a", SampleKind::kCompute, 1000)};
  double last = aggregate(log, kSec).overhead;
  for (int i = 0; i < 300; ++i) {
    log.push_back(sample("a", rng() % 2 ? SampleKind::kCouplingWait : SampleKind::kCouplingIo,
                         static_cast<std::int64_t>(rng() % 1000), OperatorPhase::kB));
    const auto r = aggregate(log, kSec, {.critical_kernel = "a"});
    CHECK(r.overhead >= last);
    last = r.overhead;
  }
}

TEST_CASE("recorder merges concurrent per-kernel buffers") {
  Recorder rec;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&rec, t] {
      auto& buf = rec.buffer("k" + std::to_string(t));
      for (int i = 0; i < 1000; ++i) buf.record(sample("k" + std::to_string(t), SampleKind::kCompute, i));
    });
  }
  for (auto& t : threads) t.join();
  const auto all = rec.samples();
  CHECK(all.size() == 4000);
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].kernel == all[i - 1].kernel) CHECK(all[i].duration_ns == all[i - 1].duration_ns + 1);
  }
}

TEST_CASE("recording stays cheap") {
  Recorder rec;
  auto& buf = rec.buffer("k");
  const int n = 200000;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) buf.record(sample("k", SampleKind::kCompute, i));
  const double per = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count() / n;
  CHECK(per < 1000.0);
}

TEST_CASE("timer sanity: a 100 ms sleep measures 95-150 ms") {
  const auto t0 = std::chrono::steady_clock::now();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(ms >= 95.0);
  CHECK(ms <= 150.0);
}

TEST_CASE("rendering") {
  const auto empty = render_report(PerfReport{}, ReportFormat::kTable);
  CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);
  CHECK(empty.find("efficiency") != std::string::npos);

  std::vector<PhaseSample> log{sample("fine", SampleKind::kCompute, 2 * kSec),
                               sample("fine", SampleKind::kCouplingWait, kSec / 50, OperatorPhase::kB),
                               sample("coarse", SampleKind::kCompute, kSec / 10)};
  auto r = aggregate(log, 2 * kSec + kSec / 20,
                     {.scenario = "hemo-ms", .usage_pct = 42.5, .baseline_wall_ns = 2 * kSec, .generated_at = "t"});
  REQUIRE(r.efficiency);
  const auto json = render_report(r, ReportFormat::kJson);
  for (const auto* key : {"\"kernels\"", "\"coupling_ns\"", "\"wall_ns\"", "\"usage_pct\"", "\"overhead\"", "\"efficiency\""}) {
    CHECK(json.find(key) != std::string::npos);
  }
  const auto back = parse_report_json(json);
  CHECK(back == r);
  CHECK(render_report(back, ReportFormat::kJson) == json);
  const auto table = render_report(r, ReportFormat::kTable);
  CHECK(table == render_report(r, ReportFormat::kTable));
  CHECK(table.find("fine*") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);

  std::vector<PerfReport> two{r, r};
  two[1].scenario = "other";
  const auto both = render_table(two);
  CHECK(std::count(both.begin(), both.end(), '\n') == 5);
}

TEST_CASE("json round trip on random reports") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    PerfReport r;
    r.scenario = "s" + std::to_string(rng() % 100);
    r.generated_at = "2026-01-01T00:00:00Z";
    for (int k = 0; k < static_cast<int>(rng() % 4); ++k) {
      r.kernels.push_back({"k" + std::to_string(k), static_cast<std::int64_t>(rng() >> 4),
                           static_cast<std::int64_t>(rng() >> 4), static_cast<std::int64_t>(rng() >> 4), rng() % 1000});
    }
    r.critical_kernel = r.kernels.empty() ? "" : r.kernels[0].id;
    r.coupling_ns = static_cast<std::int64_t>(rng() >> 4);
    r.wall_ns = static_cast<std::int64_t>(rng() >> 4);
    if (rng() % 2) r.usage_pct = std::ldexp(static_cast<double>(rng() >> 11), -47);
    r.overhead = std::ldexp(static_cast<double>(rng() >> 11), -53);
    if (rng() % 2) r.efficiency = std::ldexp(static_cast<double>(rng() >> 11), -52);
    const auto json = render_report(r, ReportFormat::kJson);
    CHECK(parse_report_json(json) == r);
  }
  CHECK_THROWS_AS(parse_report_json("{not json"), Error);
}
