#include "support.hpp"

#include "ppls/em.hpp"
#include "ppls/inference.hpp"
#include "ppls/numerics.hpp"
#include "ppls/pls.hpp"

#include <benchmark/benchmark.h>

using namespace ppls;

namespace {

DataPair bench_data(Eigen::Index p, Eigen::Index n) {
  std::mt19937_64 rng(42);
  return testing::sample_gaussian(testing::random_theta(p, p, 3, rng), n, 7);
}

}  // namespace

static void BM_SolveSpd(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  std::mt19937_64 rng(1);
  const Matrix a = testing::random_normal(d, d, rng);
  const Matrix m = a * a.transpose() + Matrix::Identity(d, d) * static_cast<double>(d);
  const Matrix b = testing::random_normal(d, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd(m, b));
}
BENCHMARK(BM_SolveSpd)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_EStep(benchmark::State& state) {
  const DataPair d = bench_data(state.range(0), 500);
  std::mt19937_64 rng(2);
  const Theta th = testing::random_theta(d.p(), d.q(), 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(d, th));
}
BENCHMARK(BM_EStep)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_EmIteration(benchmark::State& state) {
  const DataPair d = bench_data(state.range(0), 500);
  const Theta start = initialize_theta(d, 3, 0);
  FitConfig cfg;
  for (auto _ : state) {
    const EStepMoments m = e_step(d, start);
    benchmark::DoNotOptimize(m_step(d, m, cfg));
  }
}
BENCHMARK(BM_EmIteration)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_FitPpls(benchmark::State& state) {
  const DataPair d = bench_data(20, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_ppls(d, 3));
}
BENCHMARK(BM_FitPpls)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_FitPls(benchmark::State& state) {
  const DataPair d = bench_data(20, 500);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pls(d, 3));
}
BENCHMARK(BM_FitPls)->Unit(benchmark::kMicrosecond);

static void BM_AsymptoticSe(benchmark::State& state) {
  const DataPair d = bench_data(20, 500);
  const Theta th = fit_ppls(d, 3).theta;
  for (auto _ : state) benchmark::DoNotOptimize(asymptotic_loading_se(d, th));
}
BENCHMARK(BM_AsymptoticSe)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
