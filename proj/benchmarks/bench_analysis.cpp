#include <benchmark/benchmark.h>

#include "twinsim/estimators.hpp"
#include "twinsim/source.hpp"

using namespace twinsim;

namespace {

RealFramePair make_pair(std::uint32_t side, std::uint32_t frames) {
  SourceModel s;
  s.kind = SourceKind::twin;
  s.n0 = 1000.0;
  s.modes = 1e4;
  return to_real(gen_twin_pairs(s, {side, side, frames}, 11));
}

void BM_EstimateSigmaStack(benchmark::State& state) {
  const auto pair = make_pair(std::uint32_t(state.range(0)), 16);
  const Region region = Region::full(pair.signal.geometry());
  for (auto _ : state) {
    auto sigmas = estimate_sigma_stack(pair, region);
    benchmark::DoNotOptimize(sigmas.data());
  }
  state.SetItemsProcessed(std::int64_t(state.iterations()) * 16 *
                          std::int64_t(region.size()));
}
BENCHMARK(BM_EstimateSigmaStack)->Arg(64)->Arg(128);

void BM_FlatField(benchmark::State& state) {
  const auto pair = make_pair(128, 16);
  for (auto _ : state) {
    auto out = flat_field(pair.signal);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_FlatField);

void BM_AlphaQuantumMaps(benchmark::State& state) {
  const auto pair = make_pair(128, 16);
  for (auto _ : state) {
    SnrAccumulator acc(128, 128, Scheme::quantum);
    for (std::size_t f = 0; f < pair.signal.n_frames(); ++f) {
      acc.add(alpha_quantum(pair, f, 1000.0));
    }
    auto rep = acc.finalize();
    benchmark::DoNotOptimize(rep.snr.data());
  }
}
BENCHMARK(BM_AlphaQuantumMaps);

}  // namespace
