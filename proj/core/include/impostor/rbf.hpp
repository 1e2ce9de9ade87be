#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impostor/matrix.hpp"

namespace impostor {

using Label = std::uint32_t;

/// Bandwidth of the Gaussian kernel, in embedding-space units.
class KernelParams {
 public:
  explicit KernelParams(double sigma);
  double sigma() const noexcept { return sigma_; }
  /// 1 / (2 sigma^2): multiplies a squared distance to give the negative log-weight.
  double inv_two_sigma_sq() const noexcept { return inv_two_sigma_sq_; }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;

 private:
  double sigma_;
  double inv_two_sigma_sq_;
};

/// Class probabilities of the RBF rule. Always sized to the global class count.
struct ClassDistribution {
  std::vector<double> probs;

  std::size_t class_count() const noexcept { return probs.size(); }
  /// Entries in [0, 1] and summing to one within 1e-9.
  bool is_valid() const noexcept;
};

/// Labelled reference points ("impostors") that vote in the RBF rule.
struct ImpostorSet {
  Matrix points;  // M x d
  std::vector<Label> labels;
  std::size_t class_count = 0;
  bool frozen = false;

  std::size_t size() const noexcept { return points.rows(); }
  std::size_t dim() const noexcept { return points.cols(); }

  /// Throws ContractError unless M >= 1, labels match rows and are < L, and
  /// every coordinate is finite.
  void validate() const;

  friend bool operator==(const ImpostorSet&, const ImpostorSet&) = default;
};

/// exp(-||y - c||^2 / (2 sigma^2)).
double kernel_weight(std::span<const double> y, std::span<const double> c, const KernelParams& params);

/// RBF rule evaluated from precomputed squared distances. Weights are formed
/// as exp(-(d_j - d_min) / (2 sigma^2)), so the nearest impostor always has
/// weight one and the normalizer never underflows. `exclude` removes one
/// impostor from both sums.
ClassDistribution classify_from_squared_distances(std::span<const double> squared_distances,
                                                  std::span<const Label> labels,
                                                  std::size_t class_count,
                                                  const KernelParams& params,
                                                  std::optional<std::size_t> exclude = std::nullopt);

ClassDistribution classify(std::span<const double> y, const ImpostorSet& impostors,
                           const KernelParams& params,
                           std::optional<std::size_t> exclude = std::nullopt);

/// classify() for every row of `queries`. With threads > 1 rows are split
/// across workers; each row's result does not depend on the thread count.
std::vector<ClassDistribution> classify_batch(const Matrix& queries, const ImpostorSet& impostors,
                                              const KernelParams& params, std::size_t threads = 1);

/// Argmax; ties go to the smallest class id.
Label predict_label(const ClassDistribution& dist);

}  // namespace impostor
