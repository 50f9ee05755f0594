// Parallel kernels against their serial reference implementations.
// Thread count comes from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "graphlim/discrete.hpp"
#include "graphlim/grid.hpp"
#include "graphlim/model.hpp"

using namespace graphlim;

namespace {

DiscreteState random_state(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> phi(n), kappa(n * n);
  for (auto& x : phi) x = 3.0 * d(rng);
  for (auto& x : kappa) x = d(rng);
  auto [u, K] = embed(phi, 1, kappa);
  return {0.0, std::move(u), std::move(K)};
}

double graphon(double x, double y) { return std::exp(-(x - y) * (x - y)); }

void BM_rhs(benchmark::State& st) {
  const auto m = kuramoto_adaptive(0.5, 0.3, 0.2, 0.5);
  const auto s = random_state(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(rhs(m, s));
}

void BM_rhs_serial(benchmark::State& st) {
  const auto m = kuramoto_adaptive(0.5, 0.3, 0.2, 0.5);
  const auto s = random_state(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(rhs_serial(m, s));
}

void BM_cell_average_2d(benchmark::State& st) {
  const UnitGrid g(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(cell_average_2d(graphon, g, 4));
}

void BM_cell_average_2d_serial(benchmark::State& st) {
  const UnitGrid g(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(cell_average_2d_serial(graphon, g, 4));
}

}  // namespace

BENCHMARK(BM_rhs)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_rhs_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_cell_average_2d)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_cell_average_2d_serial)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
