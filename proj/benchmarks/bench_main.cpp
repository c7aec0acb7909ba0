#include <benchmark/benchmark.h>

#include <random>

#include "mmsf/resman/resman.hpp"
#include "mmsf/solvers/solvers.hpp"
#include "mmsf/transport/frame.hpp"

using namespace mmsf;

namespace {

bytes::Buffer random_bytes(std::size_t n) {
  std::mt19937_64 rng(1);
  bytes::Buffer out(n);
  for (auto& b : out) b = static_cast<std::byte>(rng() & 0xff);
  return out;
}

void BM_FrameEncode(benchmark::State& state) {
  const auto body = random_bytes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto frame = transport::encode_frame(7, 1, 0, body);
    benchmark::DoNotOptimize(frame.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FrameEncode)->RangeMultiplier(16)->Range(64, 16 << 20);

void BM_FrameDecode(benchmark::State& state) {
  const auto frame = transport::encode_frame(7, 1, 0, random_bytes(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    auto view = transport::decode_frame(frame);
    benchmark::DoNotOptimize(view.payload.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FrameDecode)->RangeMultiplier(16)->Range(64, 16 << 20);

void BM_LbmStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto grid = solvers::LatticeGrid::uniform(n, n / 2, 0.52);
  grid.force = {1e-6, 0.0};
  for (auto _ : state) solvers::lbm_step(grid);
  state.SetItemsProcessed(state.iterations() * grid.nx * grid.ny);
}
BENCHMARK(BM_LbmStep)->Arg(64)->Arg(128)->Arg(256);

void BM_SimulateSchedule(benchmark::State& state) {
  std::string text =
      "resource huygens cores=32\n"
      "reservation r1 resource=huygens cores=32 start=0 end=auto\n"
      "phase isr bf duration=480 cores=32 parallel\n"
      "phase isr serial duration=1333 cores=1\n";
  for (int i = 0; i < state.range(0); ++i) text += "instance sim-" + std::to_string(i) + " profile=isr reservation=r1\n";
  text += "cycles 50\n";
  const auto scenario = resman::parse_scenarios(text).at(0);
  for (auto _ : state) {
    auto sched = scenario.simulate();
    benchmark::DoNotOptimize(sched.report.usage_pct);
  }
}
BENCHMARK(BM_SimulateSchedule)->Arg(1)->Arg(2)->Arg(8);

}  // namespace

// The packaged libbenchmark_main.a is LTO bytecode from another gcc.
BENCHMARK_MAIN();
