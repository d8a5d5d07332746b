#include <benchmark/benchmark.h>

#include "pathvi/numerics.hpp"

namespace {

using pathvi::numerics::Matrix;
using pathvi::numerics::Rng;

Matrix seeded_matrix(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.gaussian();
  return m;
}

void BM_SmallestSingularPair(benchmark::State& state) {
  const Matrix m = seeded_matrix(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pathvi::numerics::smallest_singular_pair(m));
  }
}
BENCHMARK(BM_SmallestSingularPair)->Arg(2)->Arg(3)->Arg(8)->Arg(32);

void BM_OperatorNorm(benchmark::State& state) {
  const Matrix m = seeded_matrix(static_cast<int>(state.range(0)), 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pathvi::numerics::operator_norm(m));
  }
}
BENCHMARK(BM_OperatorNorm)->Arg(3)->Arg(32);

void BM_SampleGaussianLinear(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pathvi::numerics::sample_gaussian_linear(static_cast<int>(state.range(0)), 0.5, 11));
  }
}
BENCHMARK(BM_SampleGaussianLinear)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
