#include <benchmark/benchmark.h>

#include "surfsl/remap.hpp"

using namespace surfsl;

namespace {

const PointCloud& torus_cloud() {
  static const PointCloud c = generate_nodes(Manifold::torus(1.0, 1.0 / 3.0), 2000, 1);
  return c;
}

RemapConfig config(int k, RemapOperator op) { return {k, MinPointsRadius{2.0}, op}; }

void BM_SingleWeights(benchmark::State& state) {
  const auto op = state.range(1) == 0 ? RemapOperator::L1 : RemapOperator::MLS;
  const Remapper r(torus_cloud(), config(static_cast<int>(state.range(0)), op));
  const auto zs = sample_uniform(torus_cloud().manifold(), 64, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(r.weights(zs[i++ % zs.size()]).l1_norm());
}

// Batch path with spatial ordering and warm-started L1 solves.
void BM_BatchWeights(benchmark::State& state) {
  const auto op = state.range(1) == 0 ? RemapOperator::L1 : RemapOperator::MLS;
  const Remapper r(torus_cloud(), config(static_cast<int>(state.range(0)), op));
  const auto zs = sample_uniform(torus_cloud().manifold(), 1000, 3);
  for (auto _ : state) {
    double s = 0.0;
    r.for_each_weights(zs, [&](std::size_t, const WeightSet& w) { s += w.l1_norm(); });
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(zs.size()));
}

}  // namespace

BENCHMARK(BM_SingleWeights)->ArgsProduct({{2, 4}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchWeights)->ArgsProduct({{2, 4}, {0, 1}})->Unit(benchmark::kMillisecond);
