#include <benchmark/benchmark.h>

#include "twinsim/detector.hpp"
#include "twinsim/source.hpp"

using namespace twinsim;

namespace {

SourceModel twin_source(double n0, double modes, PairKernel kernel = PairKernel::delta()) {
  SourceModel s;
  s.kind = SourceKind::twin;
  s.n0 = n0;
  s.modes = modes;
  s.spread = kernel;
  return s;
}

void BM_GenTwinDelta(benchmark::State& state) {
  const Geometry geom{std::uint32_t(state.range(0)), std::uint32_t(state.range(0)), 4};
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto pair = gen_twin_pairs(twin_source(1000.0, 1e4), geom, seed++);
    benchmark::DoNotOptimize(pair.signal.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(geom.n_pixels()) *
                          geom.n_frames);
}
BENCHMARK(BM_GenTwinDelta)->Arg(64)->Arg(128);

void BM_GenTwinGaussianKernel(benchmark::State& state) {
  const Geometry geom{std::uint32_t(state.range(0)), std::uint32_t(state.range(0)), 4};
  const auto source = twin_source(1000.0, 1e4, PairKernel::gaussian(2, 0.35));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto pair = gen_twin_pairs(source, geom, seed++);
    benchmark::DoNotOptimize(pair.signal.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(geom.n_pixels()) *
                          geom.n_frames);
}
BENCHMARK(BM_GenTwinGaussianKernel)->Arg(64)->Arg(128);

void BM_GenCoherent(benchmark::State& state) {
  const Geometry geom{128, 128, 4};
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto stack = gen_coherent(1000.0, geom, seed++);
    benchmark::DoNotOptimize(stack.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(geom.n_pixels()) *
                          geom.n_frames);
}
BENCHMARK(BM_GenCoherent);

void BM_ApplyLoss(benchmark::State& state) {
  const Geometry geom{128, 128, 4};
  const auto input = gen_thermal(1000.0, 1e4, geom, 3);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto out = apply_loss(input, 0.7, seed++);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(geom.n_pixels()) *
                          geom.n_frames);
}
BENCHMARK(BM_ApplyLoss);

}  // namespace
