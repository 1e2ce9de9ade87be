#include <gtest/gtest.h>

#include <random>

#include "impostor/bench.hpp"
#include "impostor/error.hpp"
#include "oracles.hpp"

namespace impostor {
namespace {

TrainedModel random_model(std::size_t m, std::size_t d, std::size_t classes) {
  std::mt19937_64 rng(1);
  TrainedModel model;
  const std::vector<std::size_t> hidden{16};
  model.backbone = Backbone::random_mlp(8, hidden, d, 2);
  ImpostorSet set;
  set.points = oracle::random_matrix(m, d, rng);
  set.class_count = classes;
  for (std::size_t j = 0; j < m; ++j) set.labels.push_back(static_cast<Label>(j % classes));
  model.head = set;
  model.class_count = classes;
  return model;
}

TEST(OpCounters, UncompressedIsMdPlusM) {
  const TrainedModel m = random_model(300, 12, 3);
  const OpCounts c = op_counters(m);
  EXPECT_EQ(c.rbf_madds, 300u * 12 + 300);
  EXPECT_EQ(c.backbone_madds, 8u * 16 + 16u * 12);
}

TEST(OpCounters, CompressedIsTablePlusLookups) {
  TrainedModel m = random_model(300, 12, 3);
  m.head = compress(std::get<ImpostorSet>(m.head), 4, 16, 1);
  EXPECT_EQ(op_counters(m).rbf_madds, 300u * 4 + 4u * 16 * 3);
}

TEST(Bench, ReportIsPositiveAndPredictionsMatch) {
  const TrainedModel m = random_model(200, 6, 4);
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(16, 8, rng);
  const BenchOutcome out = bench_inference(m, x, BenchOptions{5, 1, 2});
  EXPECT_GT(out.timing.backbone_ns, 0.0);
  EXPECT_GT(out.timing.rbf_ns, 0.0);
  EXPECT_GT(out.timing.rbf_fraction, 0.0);
  EXPECT_LT(out.timing.rbf_fraction, 1.0);
  EXPECT_EQ(out.timing.impostors, 200u);
  EXPECT_EQ(out.timing.dim, 6u);
  EXPECT_EQ(out.timing.threads, 2u);
  EXPECT_EQ(out.timing.repetitions, 5u);
  const auto dists = m.predict(x);
  ASSERT_EQ(out.predictions.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out.predictions[i], predict_label(dists[i]));
}

TEST(Bench, CompressedModelIsFlagged) {
  TrainedModel m = random_model(64, 8, 2);
  m.head = compress(std::get<ImpostorSet>(m.head), 2, 8, 1);
  std::mt19937_64 rng(4);
  const BenchOutcome out = bench_inference(m, oracle::random_matrix(4, 8, rng));
  EXPECT_TRUE(out.timing.compressed);
}

TEST(Bench, ContractChecks) {
  const TrainedModel m = random_model(10, 4, 2);
  EXPECT_THROW(bench_inference(m, Matrix(0, 8)), ContractError);
  EXPECT_THROW(bench_inference(m, Matrix(2, 8), BenchOptions{4, 3, 1}), ContractError);
  EXPECT_THROW(bench_inference(m, Matrix(2, 5)), ContractError);
}

}  // namespace
}  // namespace impostor
