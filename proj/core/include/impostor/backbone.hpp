#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "impostor/matrix.hpp"

namespace impostor {

enum class Activation : std::uint32_t { identity = 0, relu = 1 };

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }
};

struct ForwardCache {
  /// Input to each layer (layer_inputs[0] is the batch itself).
  std::vector<Matrix> layer_inputs;
  /// Pre-activation output of each layer.
  std::vector<Matrix> pre_activations;
};

struct LayerGradients {
  Matrix weights;
  std::vector<double> bias;
};

struct ParamGradients {
  std::vector<LayerGradients> layers;

  /// Gradient tensors in the same order as Backbone::parameter_tensors().
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
};

struct BackwardResult {
  ParamGradients params;
  Matrix d_inputs;
};

/// Embedding network: a chain of dense layers. With no layers it is the
/// frozen-embedding passthrough, optionally multiplied by a fixed scale.
class Backbone {
 public:
  Backbone() = default;
  Backbone(std::size_t input_dim, std::vector<DenseLayer> layers);

  /// Frozen-embedding backend: forward is x * scale, no trainable parameters.
  static Backbone passthrough(std::size_t dim, double scale = 1.0);

  /// Hidden layers use ReLU, the last layer is identity. Weights and biases of
  /// every layer are drawn uniformly from [-1/sqrt(in), 1/sqrt(in)].
  static Backbone random_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                             std::size_t embed_dim, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t embed_dim() const noexcept;
  bool is_passthrough() const noexcept { return layers_.empty(); }
  double passthrough_scale() const noexcept { return passthrough_scale_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// Weights then bias, layer by layer.
  std::vector<std::span<double>> parameter_tensors();
  std::vector<std::span<const double>> parameter_tensors() const;
  std::size_t parameter_count() const noexcept;
  std::uint64_t multiply_adds() const noexcept;

  Matrix forward(const Matrix& inputs, ForwardCache* cache = nullptr) const;
  std::vector<double> forward_one(std::span<const double> input) const;

  BackwardResult backward(const ForwardCache& cache, const Matrix& d_embeddings) const;

  ParamGradients zero_gradients() const;

  friend bool operator==(const Backbone&, const Backbone&);

 private:
  void validate() const;

  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
  double passthrough_scale_ = 1.0;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);

/// Divides the last layer's weights and bias by `factor` (a passthrough
/// backbone has its scale divided instead).
Backbone rescale_last_layer(const Backbone& net, double factor);

}  // namespace impostor
