#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace impostor {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2: weight_decay * theta is added to the gradient before the
  /// moment updates.
  double weight_decay = 0.0;

  void validate() const;
};

/// Moment accumulators, one pair per parameter tensor, plus the shared step count.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(std::span<const std::span<double>> params);
};

/// One bias-corrected Adam update of every tensor in `params`.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamHyper& hyper);

}  // namespace impostor
