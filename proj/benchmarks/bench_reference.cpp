#include <benchmark/benchmark.h>

#include "pathvi/fields.hpp"
#include "pathvi/reference.hpp"
#include "pathvi/solver.hpp"

namespace {

using pathvi::numerics::Rng;
using pathvi::numerics::Vector;

void BM_EvalJK(benchmark::State& state) {
  const auto f = pathvi::fields::make_polynomial_field(
      static_cast<int>(state.range(0)), 3);
  Rng rng(5);
  const Vector x = 0.7 * rng.uniform_ball(f->dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(pathvi::reference::eval_JK(*f, x));
  }
}
BENCHMARK(BM_EvalJK)->Arg(2)->Arg(3)->Arg(8);

void BM_TangentDirection(benchmark::State& state) {
  const auto f = pathvi::fields::make_polynomial_field(
      static_cast<int>(state.range(0)), 3);
  Rng rng(5);
  const Vector x = 0.7 * rng.uniform_ball(f->dim());
  Vector v = Vector::Zero(f->dim());
  v[0] = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pathvi::reference::tangent_direction(*f, x, v));
  }
}
BENCHMARK(BM_TangentDirection)->Arg(2)->Arg(3)->Arg(8);

void BM_SolveSmoothedFig1(benchmark::State& state) {
  const auto f = pathvi::fields::make_fig1_displacement();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pathvi::solver::solve_smoothed(
        *f, 0.05, 0.1, 1e-3, 7, pathvi::solver::Mode::Adaptive));
  }
}
BENCHMARK(BM_SolveSmoothedFig1);

}  // namespace
