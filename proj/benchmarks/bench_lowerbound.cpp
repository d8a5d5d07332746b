#include <benchmark/benchmark.h>

#include "pathvi/lowerbound.hpp"

namespace {

using namespace pathvi::lowerbound;
using pathvi::numerics::Rng;
using pathvi::numerics::Vector;

std::shared_ptr<HardInstance> instance(int k) {
  HardInstanceConfig cfg;
  cfg.k = k;
  auto oracle = std::make_shared<ExplicitOracle>(ExplicitOracle::path_graph(k));
  return HardInstance::make(cfg, oracle);
}

void BM_BuildGvCode(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_gv_code(static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_BuildGvCode)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ClassifyRegion(benchmark::State& state) {
  const auto inst = instance(static_cast<int>(state.range(0)));
  Rng rng(3);
  const Vector x = rng.uniform_ball(inst->dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst->classify(x));
  }
}
BENCHMARK(BM_ClassifyRegion)->Arg(2)->Arg(4);

void BM_Displacement(benchmark::State& state) {
  const auto inst = instance(static_cast<int>(state.range(0)));
  Rng rng(3);
  const Vector x = 0.5 * inst->vertex_point_prime(1) +
                   0.5 * inst->gamma() * rng.uniform_sphere(inst->dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst->displacement(x));
  }
}
BENCHMARK(BM_Displacement)->Arg(2)->Arg(4);

}  // namespace
