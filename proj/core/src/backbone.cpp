#include "impostor/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "impostor/error.hpp"

namespace impostor {

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.activation == b.activation && a.weights == b.weights && a.bias == b.bias;
}

bool operator==(const Backbone& a, const Backbone& b) {
  return a.input_dim_ == b.input_dim_ && a.passthrough_scale_ == b.passthrough_scale_ &&
         a.layers_ == b.layers_;
}

std::vector<std::span<double>> ParamGradients::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> ParamGradients::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

Backbone::Backbone(std::size_t input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  validate();
}

Backbone Backbone::passthrough(std::size_t dim, double scale) {
  require(dim >= 1, "Backbone::passthrough: dimension must be positive");
  require(std::isfinite(scale) && scale > 0.0, "Backbone::passthrough: scale must be positive");
  Backbone net(dim, {});
  net.passthrough_scale_ = scale;
  return net;
}

Backbone Backbone::random_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                              std::size_t embed_dim, std::uint64_t seed) {
  require(input_dim >= 1 && embed_dim >= 1, "Backbone::random_mlp: dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  auto make_layer = [&](std::size_t out, Activation act) {
    require(out >= 1, "Backbone::random_mlp: layer width must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    DenseLayer layer{Matrix(out, in), std::vector<double>(out), act};
    for (double& w : layer.weights.values()) w = uniform(rng);
    for (double& b : layer.bias) b = uniform(rng);
    layers.push_back(std::move(layer));
    in = out;
  };
  for (std::size_t width : hidden) make_layer(width, Activation::relu);
  make_layer(embed_dim, Activation::identity);
  return Backbone(input_dim, std::move(layers));
}

void Backbone::validate() const {
  require(input_dim_ >= 1, "Backbone: input dimension must be positive");
  std::size_t in = input_dim_;
  for (const auto& layer : layers_) {
    require(layer.in_dim() == in, "Backbone: layer dimensions do not chain");
    require(layer.bias.size() == layer.out_dim(), "Backbone: bias length does not match layer");
    require(layer.weights.all_finite(), "Backbone: non-finite weight");
    require(std::all_of(layer.bias.begin(), layer.bias.end(), [](double v) { return std::isfinite(v); }),
            "Backbone: non-finite bias");
    in = layer.out_dim();
  }
}

std::size_t Backbone::embed_dim() const noexcept {
  return layers_.empty() ? input_dim_ : layers_.back().out_dim();
}

std::vector<std::span<double>> Backbone::parameter_tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> Backbone::parameter_tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers_) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::size_t Backbone::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::uint64_t Backbone::multiply_adds() const noexcept {
  std::uint64_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::uint64_t>(layer.weights.size());
  return n;
}

Matrix Backbone::forward(const Matrix& inputs, ForwardCache* cache) const {
  require(inputs.cols() == input_dim_, "Backbone::forward: input width does not match network");
  if (cache) {
    cache->layer_inputs.clear();
    cache->pre_activations.clear();
  }
  if (layers_.empty()) {
    Matrix out = inputs;
    if (passthrough_scale_ != 1.0) {
      for (double& v : out.values()) v *= passthrough_scale_;
    }
    if (cache) cache->layer_inputs.push_back(inputs);
    return out;
  }

  Matrix current = inputs;
  for (const auto& layer : layers_) {
    Matrix z(current.rows(), layer.out_dim());
    for (std::size_t r = 0; r < current.rows(); ++r) {
      const auto x = current.row(r);
      auto zr = z.row(r);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        zr[o] = dot(layer.weights.row(o), x) + layer.bias[o];
      }
    }
    Matrix a = z;
    if (layer.activation == Activation::relu) {
      for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    }
    if (cache) {
      cache->layer_inputs.push_back(std::move(current));
      cache->pre_activations.push_back(std::move(z));
    }
    current = std::move(a);
  }
  return current;
}

std::vector<double> Backbone::forward_one(std::span<const double> input) const {
  Matrix in(1, input.size(), std::vector<double>(input.begin(), input.end()));
  Matrix out = forward(in);
  return {out.values().begin(), out.values().end()};
}

ParamGradients Backbone::zero_gradients() const {
  ParamGradients g;
  for (const auto& layer : layers_) {
    g.layers.push_back({Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim())});
  }
  return g;
}

BackwardResult Backbone::backward(const ForwardCache& cache, const Matrix& d_embeddings) const {
  require(!cache.layer_inputs.empty(), "Backbone::backward: empty cache");
  const std::size_t batch = cache.layer_inputs.front().rows();
  require(cache.layer_inputs.front().cols() == input_dim_,
          "Backbone::backward: cache does not match this network");
  require(d_embeddings.rows() == batch && d_embeddings.cols() == embed_dim(),
          "Backbone::backward: upstream gradient shape mismatch");

  BackwardResult result{zero_gradients(), Matrix()};
  if (layers_.empty()) {
    require(cache.pre_activations.empty(), "Backbone::backward: cache does not match this network");
    result.d_inputs = d_embeddings;
    if (passthrough_scale_ != 1.0) {
      for (double& v : result.d_inputs.values()) v *= passthrough_scale_;
    }
    return result;
  }
  require(cache.layer_inputs.size() == layers_.size() &&
              cache.pre_activations.size() == layers_.size(),
          "Backbone::backward: cache does not match this network");

  Matrix upstream = d_embeddings;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    const Matrix& x = cache.layer_inputs[li];
    const Matrix& z = cache.pre_activations[li];
    require(x.cols() == layer.in_dim() && z.cols() == layer.out_dim() && x.rows() == batch,
            "Backbone::backward: stale cache");

    Matrix dz = std::move(upstream);
    if (layer.activation == Activation::relu) {
      auto dzv = dz.values();
      auto zv = z.values();
      for (std::size_t k = 0; k < dzv.size(); ++k) {
        if (!(zv[k] > 0.0)) dzv[k] = 0.0;
      }
    }

    auto& g = result.params.layers[li];
    for (std::size_t r = 0; r < batch; ++r) {
      const auto xr = x.row(r);
      const auto dzr = dz.row(r);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        const double go = dzr[o];
        if (go == 0.0) continue;
        g.bias[o] += go;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < layer.in_dim(); ++i) gw[i] += go * xr[i];
      }
    }

    Matrix dx(batch, layer.in_dim());
    for (std::size_t r = 0; r < batch; ++r) {
      const auto dzr = dz.row(r);
      auto dxr = dx.row(r);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        const double go = dzr[o];
        if (go == 0.0) continue;
        const auto w = layer.weights.row(o);
        for (std::size_t i = 0; i < layer.in_dim(); ++i) dxr[i] += go * w[i];
      }
    }
    upstream = std::move(dx);
  }
  result.d_inputs = std::move(upstream);
  return result;
}

Backbone rescale_last_layer(const Backbone& net, double factor) {
  require(std::isfinite(factor) && factor > 0.0, "rescale_last_layer: factor must be positive and finite");
  if (net.is_passthrough()) {
    return Backbone::passthrough(net.input_dim(), net.passthrough_scale() / factor);
  }
  std::vector<DenseLayer> layers = net.layers();
  auto& last = layers.back();
  for (double& w : last.weights.values()) w /= factor;
  for (double& b : last.bias) b /= factor;
  return Backbone(net.input_dim(), std::move(layers));
}

}  // namespace impostor
