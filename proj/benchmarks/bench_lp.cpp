#include <random>

#include <benchmark/benchmark.h>

#include "surfsl/lp.hpp"

using namespace surfsl;

namespace {

// Underdetermined system shaped like a degree-k reproduction constraint.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> random_system(Eigen::Index m, Eigen::Index n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd V(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) V(i, j) = u(rng);
  Eigen::VectorXd p = V.rowwise().mean();
  return {V, p};
}

void BM_L1LongStep(benchmark::State& state) {
  const auto [V, p] = random_system(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(l1_minimize(V, p, L1Method::LongStep).norm1);
}

void BM_L1StandardForm(benchmark::State& state) {
  const auto [V, p] = random_system(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(l1_minimize(V, p, L1Method::StandardForm).norm1);
}

void BM_L1WarmStart(benchmark::State& state) {
  const auto [V, p] = random_system(state.range(0), state.range(1));
  const L1Result cold = l1_minimize(V, p);
  for (auto _ : state) benchmark::DoNotOptimize(l1_minimize(V, p, L1Method::LongStep, cold.basis).norm1);
}

}  // namespace

BENCHMARK(BM_L1LongStep)->Args({10, 40})->Args({20, 80})->Args({35, 140})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_L1StandardForm)->Args({10, 40})->Args({20, 80})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_L1WarmStart)->Args({10, 40})->Args({20, 80})->Args({35, 140})->Unit(benchmark::kMicrosecond);
