// Parallel kernels against the serial reference, and evaluation scaling.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "pixdef/dataset.h"
#include "pixdef/metrics.h"
#include "pixdef/pipeline.h"
#include "pixdef/random.h"
#include "pixdef/shrinkage.h"
#include "pixdef/wavelet.h"

using namespace pixdef;

namespace {

Plane noise_plane(std::size_t n) {
  RandomSource rng(1);
  Plane p(n, n);
  for (double& v : p.data) v = rng.uniform01();
  return p;
}

Image noise_image(std::size_t n) {
  RandomSource rng(2);
  std::vector<double> v(n * n * 3);
  for (double& x : v) x = rng.uniform01();
  return Image::from_values(n, n, 3, std::move(v));
}

void BM_dwt2(benchmark::State& state) {
  const Plane p = noise_plane(static_cast<std::size_t>(state.range(0)));
  const WaveletSpec spec{WaveletFamily::db2, 4};
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(dwt2(p, spec));
}

void BM_dwt2_reference(benchmark::State& state) {
  const Plane p = noise_plane(static_cast<std::size_t>(state.range(0)));
  const WaveletSpec spec{WaveletFamily::db2, 4};
  for (auto _ : state) benchmark::DoNotOptimize(reference::dwt2(p, spec));
}

void BM_idwt2(benchmark::State& state) {
  const WaveletSpec spec{WaveletFamily::db2, 4};
  const auto pyr = dwt2(noise_plane(static_cast<std::size_t>(state.range(0))), spec);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(idwt2(pyr, spec));
}

void BM_idwt2_reference(benchmark::State& state) {
  const WaveletSpec spec{WaveletFamily::db2, 4};
  const auto pyr = dwt2(noise_plane(static_cast<std::size_t>(state.range(0))), spec);
  for (auto _ : state) benchmark::DoNotOptimize(reference::idwt2(pyr, spec));
}

void BM_defend_299(benchmark::State& state) {
  const Image img = noise_image(299);
  const DefenseConfig cfg;
  const ZeroMapProvider zero;
  omp_set_num_threads(static_cast<int>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(defend(img, cfg, zero, seed++));
}

void BM_evaluate(benchmark::State& state) {
  static const auto clf =
      train_toy_classifier(make_synthetic_dataset({}, 160, 1), 8, {100, 0.0, 0.0, true, 0}).classifier;
  static const Dataset data = make_synthetic_dataset({}, 64, 2);
  DefenseConfig cfg;
  cfg.ensemble_size = 3;
  EvalOptions opts;
  opts.jobs = static_cast<int>(state.range(0));
  omp_set_num_threads(opts.jobs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_defense(data, clf, {AttackKind::fgsm, {}}, cfg, 1, opts));
  }
}

const int kThreads = omp_get_max_threads();

}  // namespace

BENCHMARK(BM_dwt2_reference)->Arg(128)->Arg(299)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dwt2)->Args({128, 1})->Args({299, 1})->Args({299, kThreads})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_idwt2_reference)->Arg(128)->Arg(299)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_idwt2)->Args({128, 1})->Args({299, 1})->Args({299, kThreads})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_defend_299)->Arg(1)->Arg(kThreads)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_evaluate)->Arg(1)->Arg(kThreads)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
