#pragma once

#include <cstddef>
#include <span>

#include "impostor/matrix.hpp"
#include "impostor/rbf.hpp"

namespace impostor {

struct LossValue {
  double total = 0.0;
  double classification_term = 0.0;  // batch mean of -log p(correct class), leave-one-out
  double attachment_term = 0.0;      // batch mean of ||f(x_i) - c_i||^2; zero for nca_loss
};

struct LossGradients {
  Matrix d_embeddings;  // B x d
  Matrix d_impostors;   // M x d (dense)
};

struct LossResult {
  LossValue value;
  LossGradients gradients;
  /// Examples whose correct-class probability had no support (no same-class
  /// impostor left after exclusion, or log-probability below the floor).
  /// Their loss is clamped and they contribute no gradient.
  std::size_t anomalies = 0;
};

/// Attachment weight of the loose scheme.
class LooseParams {
 public:
  explicit LooseParams(double lambda = 1.0);
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// Floor applied to log p(correct class): log of the smallest positive normal double.
double log_probability_floor() noexcept;

/// Mean over the batch of the leave-one-out NCA loss. Example i is scored
/// against every impostor except batch_indices[i]. Gradients are returned for
/// the embeddings and for all impostor coordinates.
LossResult nca_loss(const Matrix& batch_embeddings, std::span<const std::size_t> batch_indices,
                    std::span<const Label> batch_labels, const ImpostorSet& impostors,
                    const KernelParams& params);

/// nca_loss plus lambda * mean ||f(x_i) - c_i||^2 over the batch.
LossResult loose_loss(const Matrix& batch_embeddings, std::span<const std::size_t> batch_indices,
                      std::span<const Label> batch_labels, const ImpostorSet& impostors,
                      const KernelParams& params, const LooseParams& loose);

}  // namespace impostor
