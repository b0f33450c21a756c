// Microbenchmarks for the hot kernels: estimator forward passes, a full
// single-tile inversion, and one guided reverse step.

#include <benchmark/benchmark.h>

#include <memory>

#include "tiledit/analytic.hpp"
#include "tiledit/conv_denoiser.hpp"
#include "tiledit/guidance.hpp"
#include "tiledit/inversion.hpp"
#include "tiledit/rng.hpp"
#include "tiledit/schedule.hpp"

namespace {

using namespace tiledit;

NoiseSchedule bench_schedule(int steps) {
  return NoiseSchedule::build(1000, steps, 1e-4, 2e-2, BetaSpacing::linear);
}

Tensor noise_tensor(int h, int w, int c, std::uint64_t seed) {
  Prng rng(seed);
  Tensor x(h, w, c);
  for (float& v : x.values()) v = rng.normal_f();
  return x;
}

void BM_AnalyticEpsilon(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  NoiseSchedule s = bench_schedule(50);
  AnalyticEstimator est(GaussianMixtureWorld::builtin("twoclass"), s);
  Conditioning cond = Conditioning::null_conditioning();
  Tensor z = noise_tensor(side, side, 1, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(est.predict(z, 25, cond));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(z.size()));
}

void BM_ConvForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  NoiseSchedule s = bench_schedule(50);
  ConvDenoiserSpec spec;
  spec.base_height = side;
  spec.base_width = side;
  spec.channels = 1;
  spec.hidden = 16;
  spec.embed_dim = 8;
  spec.num_classes = 2;
  ConvDenoiser net(spec, s, 12);
  Conditioning cond = Conditioning::for_class(0);
  Tensor z = noise_tensor(side, side, 1, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.predict(z, 25, cond));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(z.size()));
}

void BM_InvertSingleTile(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  NoiseSchedule s = bench_schedule(steps);
  AnalyticEstimator est(GaussianMixtureWorld::builtin("texture"), s);
  Tensor z0 = noise_tensor(32, 32, 1, 14);
  for (auto _ : state) {
    benchmark::DoNotOptimize(invert_single_tile(z0, s, est, false));
  }
  state.SetItemsProcessed(state.iterations() * steps);
}

void BM_GuidedStep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  NoiseSchedule s = bench_schedule(50);
  AnalyticEstimator vanilla(GaussianMixtureWorld::builtin("twoclass"), s);
  AnalyticEstimator dilated(GaussianMixtureWorld::builtin("twoclass"), s);
  Conditioning cond = Conditioning::for_class(1);
  Tensor z = noise_tensor(side, side, 1, 15);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ndcfgpp_step(z, 25, 24, vanilla, dilated, cond, 0.5, s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(z.size()));
}

BENCHMARK(BM_AnalyticEpsilon)->Arg(32)->Arg(128);
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(64);
BENCHMARK(BM_InvertSingleTile)->Arg(10)->Arg(50);
BENCHMARK(BM_GuidedStep)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
