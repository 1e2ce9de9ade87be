#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "impostor/dataset.hpp"
#include "impostor/error.hpp"
#include "impostor/synthetic.hpp"

namespace impostor {
namespace {

SyntheticSpec two_rings() {
  SyntheticSpec s;
  s.samples_per_class = 1000;
  return s;
}

TEST(Synthetic, SplitSizesPerClass) {
  const DatasetSplits d = generate(two_rings());
  EXPECT_EQ(d.train.size(), 1000u);
  EXPECT_EQ(d.val.size(), 500u);
  EXPECT_EQ(d.test.size(), 500u);
  EXPECT_EQ(d.train.class_counts(), (std::vector<std::size_t>{500, 500}));
  EXPECT_EQ(d.test.class_counts(), (std::vector<std::size_t>{250, 250}));
}

TEST(Synthetic, DeterministicInSeed) {
  EXPECT_EQ(generate(two_rings()).train, generate(two_rings()).train);
  SyntheticSpec other = two_rings();
  other.seed = 8;
  EXPECT_NE(generate(other).train, generate(two_rings()).train);
}

TEST(Synthetic, SurvivesFileRoundTrip) {
  const DatasetSplits d = generate(two_rings());
  EXPECT_EQ(parse_dataset(serialize_dataset(d.test)), d.test);
}

TEST(Synthetic, RingRadiiMatchLabels) {
  const DatasetSplits d = generate(two_rings());
  double sum[2] = {0, 0};
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    sum[d.train.labels[i]] += std::hypot(d.train.vectors(i, 0), d.train.vectors(i, 1));
  }
  EXPECT_NEAR(sum[0] / 500, 1.0, 0.02);
  EXPECT_NEAR(sum[1] / 500, 2.0, 0.02);
}

// Every 2-D linear separator at 1 degree and 0.01 offset resolution. The
// best one cuts a cap off the outer ring, which tends to 1/2 + 1/6.
TEST(Synthetic, LinearSeparatorSweepStaysNearTwoThirds) {
  const LabeledEmbeddingSet s = generate(two_rings()).test;
  double best = 0.0;
  for (int a = 0; a < 360; ++a) {
    const double theta = a * std::numbers::pi / 180.0;
    std::vector<double> proj(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      proj[i] = std::cos(theta) * s.vectors(i, 0) + std::sin(theta) * s.vectors(i, 1);
    }
    for (int step = -300; step <= 300; ++step) {
      const double t = step * 0.01;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < s.size(); ++i) correct += (proj[i] > t) == (s.labels[i] == 1);
      best = std::max(best, static_cast<double>(correct) / static_cast<double>(s.size()));
    }
  }
  EXPECT_GT(best, 0.6);
  EXPECT_LE(best, 0.70);
}

TEST(Synthetic, FirstLabelShiftsClassRange) {
  SyntheticSpec s;
  s.class_count = 1;
  s.first_label = 2;
  s.radii = {1.5};
  s.samples_per_class = 100;
  const DatasetSplits d = generate(s);
  EXPECT_EQ(d.test.class_count, 3u);
  for (Label l : d.test.labels) EXPECT_EQ(l, 2u);
}

TEST(Synthetic, BlobsAndMoons) {
  SyntheticSpec s;
  s.generator = Generator::blobs;
  s.class_count = 4;
  s.samples_per_class = 40;
  EXPECT_EQ(generate(s).train.class_counts(), (std::vector<std::size_t>(4, 20)));
  s.generator = Generator::moons;
  EXPECT_THROW(generate(s), ContractError);
  s.class_count = 2;
  EXPECT_EQ(generate(s).train.size(), 40u);
  EXPECT_EQ(parse_generator("moons"), Generator::moons);
  EXPECT_THROW(parse_generator("spiral"), ContractError);
}

TEST(Synthetic, RejectsBadSpecs) {
  SyntheticSpec s;
  s.noise = -1.0;
  EXPECT_THROW(generate(s), ContractError);
  s = SyntheticSpec{};
  s.train_fraction = 0.9;
  EXPECT_THROW(generate(s), ContractError);
  s = SyntheticSpec{};
  s.radii = {1.0};
  EXPECT_THROW(generate(s), ContractError);
}

}  // namespace
}  // namespace impostor
