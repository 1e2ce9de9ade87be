#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "impostor/backbone.hpp"
#include "impostor/error.hpp"
#include "oracles.hpp"

namespace impostor {
namespace {

TEST(Backbone, ForwardMatchesOracle) {
  std::mt19937_64 rng(1);
  const std::vector<std::size_t> hidden{7, 5};
  const Backbone net = Backbone::random_mlp(4, hidden, 3, 42);
  const Matrix x = oracle::random_matrix(6, 4, rng);
  const Matrix y = net.forward(x);
  const auto layers = oracle::to_real(net);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto want = oracle::forward(layers, oracle::to_real(x.row(i)));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(y(i, k), static_cast<double>(want[k]), 1e-12);
    const auto one = net.forward_one(x.row(i));
    EXPECT_EQ(std::vector<double>(y.row(i).begin(), y.row(i).end()), one);
  }
}

TEST(Backbone, InitIsUniformInFanInBound) {
  const std::vector<std::size_t> hidden{16};
  const Backbone net = Backbone::random_mlp(9, hidden, 4, 3);
  ASSERT_EQ(net.layers().size(), 2u);
  EXPECT_EQ(net.layers()[0].activation, Activation::relu);
  EXPECT_EQ(net.layers()[1].activation, Activation::identity);
  for (double w : net.layers()[0].weights.values()) EXPECT_LE(std::fabs(w), 1.0 / 3.0);
  for (double w : net.layers()[1].bias) EXPECT_LE(std::fabs(w), 0.25);
  EXPECT_EQ(net, Backbone::random_mlp(9, hidden, 4, 3));
  EXPECT_NE(net, Backbone::random_mlp(9, hidden, 4, 4));
}

TEST(Backbone, CountsParametersAndMultiplyAdds) {
  const std::vector<std::size_t> hidden{8};
  const Backbone net = Backbone::random_mlp(3, hidden, 2, 0);
  EXPECT_EQ(net.parameter_count(), 3u * 8 + 8 + 8 * 2 + 2);
  EXPECT_EQ(net.multiply_adds(), 3u * 8 + 8u * 2);
  EXPECT_EQ(net.input_dim(), 3u);
  EXPECT_EQ(net.embed_dim(), 2u);
}

TEST(Backbone, PassthroughScalesInput) {
  const Backbone net = Backbone::passthrough(3, 2.0);
  const Matrix x(1, 3, std::vector<double>{1, -2, 3});
  EXPECT_EQ(net.forward(x), Matrix(1, 3, std::vector<double>{2, -4, 6}));
  EXPECT_EQ(net.parameter_count(), 0u);
  EXPECT_EQ(net.multiply_adds(), 0u);
  const Backbone halved = rescale_last_layer(net, 4.0);
  EXPECT_EQ(halved.passthrough_scale(), 0.5);
}

TEST(Backbone, RescaleDividesLastLayerOnly) {
  const std::vector<std::size_t> hidden{4};
  const Backbone net = Backbone::random_mlp(2, hidden, 3, 5);
  const Backbone scaled = rescale_last_layer(net, 2.0);
  EXPECT_EQ(scaled.layers()[0], net.layers()[0]);
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(3, 2, rng);
  const Matrix a = net.forward(x), b = scaled.forward(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b.values()[i], a.values()[i] / 2.0, 1e-15);
  EXPECT_THROW(rescale_last_layer(net, 0.0), ContractError);
}

TEST(Backbone, BackwardOfPassthroughScalesGradient) {
  const Backbone net = Backbone::passthrough(2, 3.0);
  ForwardCache cache;
  net.forward(Matrix(1, 2, 1.0), &cache);
  const BackwardResult r = net.backward(cache, Matrix(1, 2, std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(r.d_inputs, Matrix(1, 2, std::vector<double>{3.0, -3.0}));
}

TEST(Backbone, ForwardRejectsWrongWidth) {
  const std::vector<std::size_t> hidden{};
  const Backbone net = Backbone::random_mlp(3, hidden, 2, 1);
  EXPECT_THROW(net.forward(Matrix(2, 4, 0.0)), ContractError);
}

TEST(Backbone, GradientTensorOrderIsWeightsThenBias) {
  const std::vector<std::size_t> hidden{3};
  const Backbone net = Backbone::random_mlp(2, hidden, 2, 1);
  const ParamGradients g = net.zero_gradients();
  const auto t = g.tensors();
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0].size(), 6u);
  EXPECT_EQ(t[1].size(), 3u);
  EXPECT_EQ(t[2].size(), 6u);
  EXPECT_EQ(t[3].size(), 2u);
}

}  // namespace
}  // namespace impostor
