#include <gtest/gtest.h>

#include <cmath>

#include "impostor/error.hpp"
#include "impostor/synthetic.hpp"
#include "impostor/train.hpp"

namespace impostor {
namespace {

DatasetSplits small_rings() {
  SyntheticSpec s;
  s.samples_per_class = 100;
  return generate(s);
}

Backbone small_net(std::uint64_t seed = 3) {
  const std::vector<std::size_t> hidden{6};
  return Backbone::random_mlp(2, hidden, 4, seed);
}

TrainConfig quick(Scheme scheme) {
  TrainConfig c;
  c.scheme = scheme;
  c.epochs = 6;
  c.batch_size = 16;
  c.sigma = 0.2;
  c.tied_refresh_period = 2;
  return c;
}

TEST(Train, InitImpostorsAreEmbeddings) {
  const auto d = small_rings();
  const Backbone net = small_net();
  const ImpostorSet s = init_impostors(net, d.train);
  EXPECT_EQ(s.points, net.forward(d.train.vectors));
  EXPECT_EQ(s.labels, d.train.labels);
  EXPECT_EQ(s.class_count, 2u);
}

TEST(Train, NormalizeGivesUnitMeanNorm) {
  const auto d = small_rings();
  const Backbone net = small_net();
  const NormalizedStart n = normalize_scale(net, init_impostors(net, d.train));
  double mean = 0.0;
  for (std::size_t i = 0; i < n.impostors.size(); ++i) mean += l2_norm(n.impostors.points.row(i));
  EXPECT_NEAR(mean / static_cast<double>(n.impostors.size()), 1.0, 1e-9);
  const Matrix emb = n.backbone.forward(d.train.vectors);
  for (std::size_t i = 0; i < emb.size(); ++i) EXPECT_NEAR(emb.values()[i], n.impostors.points.values()[i], 1e-12);
  EXPECT_GT(n.factor, 0.0);
}

TEST(Train, NormalizeRejectsCollapsedEmbeddings) {
  ImpostorSet zero;
  zero.points = Matrix(3, 2, 0.0);
  zero.labels = {0, 1, 0};
  zero.class_count = 2;
  EXPECT_THROW(normalize_scale(Backbone::passthrough(2), zero), NumericError);
}

TEST(Train, ZeroEpochFixedIsNormalizedInit) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::fixed);
  c.epochs = 0;
  const TrainResult r = train(d.train, c, small_net());
  const NormalizedStart n = normalize_scale(small_net(), init_impostors(small_net(), d.train));
  EXPECT_EQ(r.model.backbone, n.backbone);
  ImpostorSet expected = n.impostors;
  expected.frozen = true;
  EXPECT_EQ(std::get<ImpostorSet>(r.model.head), expected);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.model.meta.normalization_factor, n.factor);
}

TEST(Train, FixedKeepsImpostorsFrozen) {
  const auto d = small_rings();
  const NormalizedStart n = normalize_scale(small_net(), init_impostors(small_net(), d.train));
  std::size_t calls = 0;
  const TrainResult r = train(d.train, quick(Scheme::fixed), small_net(), nullptr, [&](const EpochView& v) {
    ++calls;
    ASSERT_NE(v.impostors, nullptr);
    EXPECT_EQ(v.impostors->points, n.impostors.points);
  });
  EXPECT_EQ(calls, 6u);
  EXPECT_EQ(std::get<ImpostorSet>(r.model.head).points, n.impostors.points);
  EXPECT_NE(r.model.backbone, n.backbone);
}

TEST(Train, TiedRefreshesOnPeriodAndAtEnd) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::tied);
  c.epochs = 5;
  const TrainResult r = train(d.train, c, small_net());
  ASSERT_EQ(r.log.size(), 5u);
  EXPECT_FALSE(r.log[0].refreshed);
  EXPECT_TRUE(r.log[1].refreshed);
  EXPECT_TRUE(r.log[3].refreshed);
  EXPECT_FALSE(r.log[4].refreshed);
  EXPECT_EQ(std::get<ImpostorSet>(r.model.head).points, r.model.backbone.forward(d.train.vectors));
}

TEST(Train, LooseMovesImpostors) {
  const auto d = small_rings();
  const NormalizedStart n = normalize_scale(small_net(), init_impostors(small_net(), d.train));
  const TrainResult r = train(d.train, quick(Scheme::loose), small_net());
  EXPECT_NE(std::get<ImpostorSet>(r.model.head).points, n.impostors.points);
  EXPECT_GT(r.log.back().attachment_term, 0.0);
  EXPECT_NEAR(r.log.back().mean_loss, r.log.back().classification_term + r.log.back().attachment_term, 1e-12);
}

TEST(Train, LooseWithZeroLambdaHasNoAttachmentInTotal) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::loose);
  c.lambda = 0.0;
  const TrainResult r = train(d.train, c, small_net());
  for (const EpochRecord& e : r.log) EXPECT_EQ(e.mean_loss, e.classification_term);
}

TEST(Train, LossDecreases) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::fixed);
  c.epochs = 30;
  const TrainResult r = train(d.train, c, small_net());
  EXPECT_LT(r.log.back().mean_loss, r.log.front().mean_loss);
}

TEST(Train, Deterministic) {
  const auto d = small_rings();
  for (Scheme s : {Scheme::tied, Scheme::fixed, Scheme::loose}) {
    const TrainResult a = train(d.train, quick(s), small_net(), &d.val);
    const TrainResult b = train(d.train, quick(s), small_net(), &d.val);
    EXPECT_EQ(a.model, b.model);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      EXPECT_EQ(a.log[i].mean_loss, b.log[i].mean_loss);
      EXPECT_EQ(a.log[i].val_accuracy, b.log[i].val_accuracy);
    }
  }
}

TEST(Train, ValidationAccuracyLogged) {
  const auto d = small_rings();
  const TrainResult r = train(d.train, quick(Scheme::fixed), small_net(), &d.val);
  for (const EpochRecord& e : r.log) {
    EXPECT_GE(e.val_accuracy, 0.0);
    EXPECT_LE(e.val_accuracy, 1.0);
  }
  EXPECT_EQ(r.log.back().val_accuracy, evaluate(r.model, d.val).accuracy);
  const TrainResult no_val = train(d.train, quick(Scheme::fixed), small_net());
  EXPECT_TRUE(std::isnan(no_val.log.back().val_accuracy));
}

TEST(Train, SoftmaxBaselineNeedsClassCountOutputs) {
  const auto d = small_rings();
  EXPECT_THROW(train(d.train, quick(Scheme::softmax), small_net()), ContractError);
  const std::vector<std::size_t> hidden{6};
  const TrainResult r = train(d.train, quick(Scheme::softmax), Backbone::random_mlp(2, hidden, 2, 1));
  EXPECT_FALSE(r.model.has_impostors());
  EXPECT_TRUE(r.model.predict(d.test.vectors)[0].is_valid());
}

TEST(Train, PqTrainingKeepsCodesFixed) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::fixed);
  c.pq = PqSettings{2, 8};
  const TrainResult r = train(d.train, c, small_net());
  ASSERT_TRUE(r.model.is_compressed());
  const NormalizedStart n = normalize_scale(small_net(), init_impostors(small_net(), d.train));
  EXPECT_EQ(std::get<CompressedImpostors>(r.model.head), compress(n.impostors, 2, 8, c.seed));
  EXPECT_EQ(std::get<CompressedImpostors>(r.model.head).code_storage_bytes(), d.train.size() * 2);
}

TEST(Train, ContinueTrainingKeepsCompressedHead) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::fixed);
  c.epochs = 0;
  TrainedModel start = train(d.train, c, small_net()).model;
  start.head = compress(start.impostor_points(), 2, 8, 1);
  c.epochs = 4;
  const TrainResult r = continue_training(d.train, c, start);
  EXPECT_EQ(r.model.head, start.head);
  EXPECT_NE(r.model.backbone, start.backbone);
  EXPECT_EQ(r.log.size(), 4u);
  c.scheme = Scheme::loose;
  EXPECT_THROW(continue_training(d.train, c, start), ContractError);
  c.scheme = Scheme::fixed;
  EXPECT_THROW(continue_training(d.val, c, start), ContractError);
}

TEST(Train, ConfigValidation) {
  const auto d = small_rings();
  TrainConfig c = quick(Scheme::fixed);
  c.batch_size = 0;
  EXPECT_THROW(train(d.train, c, small_net()), ContractError);
  c = quick(Scheme::fixed);
  c.sigma = -1.0;
  EXPECT_THROW(train(d.train, c, small_net()), ContractError);
  c = quick(Scheme::loose);
  c.pq = PqSettings{};
  EXPECT_THROW(train(d.train, c, small_net()), ContractError);
  const std::vector<std::size_t> hidden{};
  EXPECT_THROW(train(d.train, quick(Scheme::fixed), Backbone::random_mlp(3, hidden, 2, 1)), ContractError);
  EXPECT_EQ(parse_scheme("tied"), Scheme::tied);
  EXPECT_THROW(parse_scheme("bogus"), ContractError);
}

TEST(Evaluate, CountsPerClass) {
  TrainedModel m;
  m.backbone = Backbone::passthrough(1);
  ImpostorSet s;
  s.points = Matrix(2, 1, std::vector<double>{-1.0, 1.0});
  s.labels = {0, 1};
  s.class_count = 2;
  m.head = s;
  m.kernel = KernelParams(0.5);
  m.class_count = 2;
  const LabeledEmbeddingSet data{Matrix(4, 1, std::vector<double>{-2, -0.5, 0.5, -0.1}), {0, 0, 1, 1}, 2};
  const EvalResult r = evaluate(m, data);
  EXPECT_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.per_class_correct, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(r.class_accuracy(1), 0.5);
  EXPECT_EQ(r.predictions, (std::vector<Label>{0, 0, 1, 0}));
}

}  // namespace
}  // namespace impostor
