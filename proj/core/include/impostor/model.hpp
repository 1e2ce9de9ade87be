#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "impostor/backbone.hpp"
#include "impostor/pq.hpp"
#include "impostor/rbf.hpp"

namespace impostor {

/// How impostors relate to training embeddings during optimization. `softmax`
/// is the cross-entropy baseline: the backbone emits class logits directly.
enum class Scheme : std::uint32_t { tied = 0, fixed = 1, loose = 2, softmax = 3 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

/// Marks a model whose backbone output is a logit vector of length L.
struct SoftmaxHead {
  friend bool operator==(const SoftmaxHead&, const SoftmaxHead&) = default;
};

using ModelHead = std::variant<ImpostorSet, CompressedImpostors, SoftmaxHead>;

struct TrainingMetadata {
  Scheme scheme = Scheme::fixed;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double lambda = 0.0;
  double normalization_factor = 1.0;
  double final_loss = 0.0;
  double final_classification_term = 0.0;
  double final_attachment_term = 0.0;
  std::size_t anomalies = 0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct TrainedModel {
  Backbone backbone;
  ModelHead head = SoftmaxHead{};
  KernelParams kernel{1.0};
  std::size_t class_count = 0;
  TrainingMetadata meta;

  bool has_impostors() const noexcept { return !std::holds_alternative<SoftmaxHead>(head); }
  bool is_compressed() const noexcept { return std::holds_alternative<CompressedImpostors>(head); }
  std::size_t impostor_count() const noexcept;
  /// Impostors as an explicit point set (decoded when compressed).
  ImpostorSet impostor_points() const;

  Matrix embed(const Matrix& inputs) const { return backbone.forward(inputs); }
  /// Class distribution for one embedding, via whichever head the model has.
  ClassDistribution predict_embedded(std::span<const double> embedding) const;
  std::vector<ClassDistribution> predict(const Matrix& inputs) const;

  void validate() const;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Numerically stable softmax of a logit vector.
ClassDistribution softmax_distribution(std::span<const double> logits);

}  // namespace impostor
