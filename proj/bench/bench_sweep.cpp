#include <benchmark/benchmark.h>

#include <map>

#include "morh2w/harness.hpp"
#include "morh2w/matdense.hpp"
#include "morh2w/norms.hpp"

using namespace morh2w;

namespace {

const StateSpace& model(Eigen::Index n) {
  static std::map<Eigen::Index, StateSpace> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, random_stable(n, 2, 2, 42)).first;
  return it->second;
}

void BM_sigma_serial(benchmark::State& st) {
  const StateSpace& s = model(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(sigma_sweep_serial(s, 1e-2, 1e2, 400));
}

void BM_sigma_parallel(benchmark::State& st) {
  const StateSpace& s = model(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(sigma_sweep(s, 1e-2, 1e2, 400));
}

void BM_grid_serial(benchmark::State& st) {
  const StateSpace& s = model(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(hinf_grid_scan(s, 400, false));
}

void BM_grid_parallel(benchmark::State& st) {
  const StateSpace& s = model(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(hinf_grid_scan(s, 400, true));
}

void BM_lyapunov(benchmark::State& st) {
  const StateSpace& s = model(st.range(0));
  const Matrix q = s.B() * s.B().transpose();
  for (auto _ : st) benchmark::DoNotOptimize(dense::solve_lyapunov(s.A(), q));
}

}  // namespace

BENCHMARK(BM_sigma_serial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sigma_parallel)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_serial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_parallel)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lyapunov)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
