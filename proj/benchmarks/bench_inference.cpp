#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>
#include <random>

#include "impostor/backbone.hpp"
#include "impostor/loss.hpp"
#include "impostor/pq.hpp"
#include "impostor/rbf.hpp"

namespace {

using namespace impostor;

Matrix normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (double& v : m.row(r)) v = normal(rng);
  return m;
}

ImpostorSet random_impostors(std::size_t count, std::size_t dim, std::size_t classes) {
  ImpostorSet set;
  set.points = normal_matrix(count, dim, 11);
  set.class_count = classes;
  for (std::size_t j = 0; j < count; ++j) set.labels.push_back(static_cast<Label>(j % classes));
  return set;
}

// Args: impostors, dim, threads. 32 queries per iteration.
void BM_ClassifyBatch(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto threads = static_cast<std::size_t>(state.range(2));
  const ImpostorSet impostors = random_impostors(m, d, 10);
  const Matrix queries = normal_matrix(32, d, 12);
  const KernelParams params{std::sqrt(static_cast<double>(d))};
  for (auto _ : state) benchmark::DoNotOptimize(classify_batch(queries, impostors, params, threads));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ClassifyBatch)
    ->Args({1000, 64, 1})
    ->Args({10000, 512, 1})
    ->Args({10000, 512, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMicrosecond);

// Args: impostors, dim, subspaces, centroids.
void BM_ClassifyCompressed(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const CompressedImpostors compressed =
      compress(random_impostors(m, d, 10), static_cast<std::size_t>(state.range(2)),
               static_cast<std::size_t>(state.range(3)), 13);
  const Matrix queries = normal_matrix(32, d, 12);
  const KernelParams params{std::sqrt(static_cast<double>(d))};
  for (auto _ : state)
    for (std::size_t q = 0; q < queries.rows(); ++q)
      benchmark::DoNotOptimize(classify_compressed(queries.row(q), compressed, params));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ClassifyCompressed)->Args({10000, 512, 8, 256})->Args({10000, 512, 64, 256})->Unit(benchmark::kMicrosecond);

// Args: input dim, hidden width, embed dim. 32 inputs per iteration.
void BM_BackboneForward(benchmark::State& state) {
  const auto in = static_cast<std::size_t>(state.range(0));
  const std::size_t hidden[] = {static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(1))};
  const Backbone backbone = Backbone::random_mlp(in, hidden, static_cast<std::size_t>(state.range(2)), 1);
  const Matrix inputs = normal_matrix(32, in, 14);
  for (auto _ : state) benchmark::DoNotOptimize(backbone.forward(inputs));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_BackboneForward)->Args({64, 64, 16})->Args({2048, 2048, 512})->Unit(benchmark::kMicrosecond);

// Args: impostors, dim. One batch of 64 scored against every impostor.
void BM_LooseLoss(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const ImpostorSet impostors = random_impostors(m, d, 10);
  std::vector<std::size_t> indices(64);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::vector<Label> labels;
  for (std::size_t i : indices) labels.push_back(impostors.labels[i]);
  const Matrix batch = normal_matrix(64, d, 15);
  const KernelParams params{std::sqrt(static_cast<double>(d))};
  const LooseParams loose{1.0};
  for (auto _ : state) benchmark::DoNotOptimize(loose_loss(batch, indices, labels, impostors, params, loose));
}
BENCHMARK(BM_LooseLoss)->Args({1000, 16})->Args({10000, 64})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
