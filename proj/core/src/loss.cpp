#include "impostor/loss.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "impostor/error.hpp"

namespace impostor {

LooseParams::LooseParams(double lambda) : lambda_(lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, "LooseParams: lambda must be non-negative");
}

double log_probability_floor() noexcept { return std::log(std::numeric_limits<double>::min()); }

namespace {

void check_batch(const Matrix& emb, std::span<const std::size_t> idx, std::span<const Label> labels,
                 const ImpostorSet& impostors) {
  require(impostors.size() >= 2, "loss: at least two impostors are required");
  require(emb.cols() == impostors.dim(), "loss: embedding and impostor dimensions differ");
  require(idx.size() == emb.rows() && labels.size() == emb.rows(),
          "loss: batch index/label count does not match embeddings");
  require(emb.rows() >= 1, "loss: empty batch");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < impostors.size(), "loss: batch index out of range");
    require(labels[i] < impostors.class_count, "loss: batch label out of range");
  }
}

}  // namespace

LossResult nca_loss(const Matrix& batch_embeddings, std::span<const std::size_t> batch_indices,
                    std::span<const Label> batch_labels, const ImpostorSet& impostors,
                    const KernelParams& params) {
  check_batch(batch_embeddings, batch_indices, batch_labels, impostors);

  const std::size_t batch = batch_embeddings.rows();
  const std::size_t m = impostors.size();
  const std::size_t d = impostors.dim();
  const double scale = params.inv_two_sigma_sq();
  const double inv_sigma_sq = 2.0 * scale;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double floor = log_probability_floor();

  LossResult result;
  result.gradients.d_embeddings = Matrix(batch, d);
  result.gradients.d_impostors = Matrix(m, d);

  std::vector<double> dist(m);
  std::vector<double> weight(m);
  double loss_sum = 0.0;

  for (std::size_t i = 0; i < batch; ++i) {
    const auto y = batch_embeddings.row(i);
    const std::size_t self = batch_indices[i];
    const Label label = batch_labels[i];

    double min_all = std::numeric_limits<double>::infinity();
    double min_same = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == self) continue;
      dist[j] = squared_distance(y, impostors.points.row(j));
      min_all = std::min(min_all, dist[j]);
      if (impostors.labels[j] == label) min_same = std::min(min_same, dist[j]);
    }

    if (!std::isfinite(min_same)) {
      // No same-class impostor survives exclusion: p(correct) = 0 exactly.
      loss_sum += -floor;
      ++result.anomalies;
      continue;
    }

    // Both sums are shifted by the global minimum; the same-class sum is at
    // least exp(-(min_same - min_all) * scale) which may underflow, so its
    // logarithm is formed from its own shift.
    double sum_all = 0.0;
    double sum_same_shifted = 0.0;  // shifted by min_same
    for (std::size_t j = 0; j < m; ++j) {
      if (j == self) continue;
      weight[j] = std::exp(-(dist[j] - min_all) * scale);
      sum_all += weight[j];
      if (impostors.labels[j] == label) sum_same_shifted += std::exp(-(dist[j] - min_same) * scale);
    }
    const double log_p = (std::log(sum_same_shifted) - min_same * scale) -
                         (std::log(sum_all) - min_all * scale);

    if (log_p < floor) {
      loss_sum += -floor;
      ++result.anomalies;
      continue;
    }
    loss_sum += -log_p;

    // dL/da_j = p_j - q_j with a_j = -||y - c_j||^2 / (2 sigma^2),
    // p_j over all impostors and q_j over same-class impostors only.
    auto gy = result.gradients.d_embeddings.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == self) continue;
      const double p = weight[j] / sum_all;
      const double q = impostors.labels[j] == label
                           ? std::exp(-(dist[j] - min_same) * scale) / sum_same_shifted
                           : 0.0;
      const double coeff = (p - q) * inv_sigma_sq * inv_batch;
      if (coeff == 0.0) continue;
      const auto c = impostors.points.row(j);
      auto gc = result.gradients.d_impostors.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = y[k] - c[k];
        gy[k] -= coeff * diff;
        gc[k] += coeff * diff;
      }
    }
  }

  result.value.classification_term = loss_sum * inv_batch;
  result.value.attachment_term = 0.0;
  result.value.total = result.value.classification_term;
  return result;
}

LossResult loose_loss(const Matrix& batch_embeddings, std::span<const std::size_t> batch_indices,
                      std::span<const Label> batch_labels, const ImpostorSet& impostors,
                      const KernelParams& params, const LooseParams& loose) {
  LossResult result = nca_loss(batch_embeddings, batch_indices, batch_labels, impostors, params);

  const std::size_t batch = batch_embeddings.rows();
  const std::size_t d = impostors.dim();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double lambda = loose.lambda();

  double attach_sum = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto y = batch_embeddings.row(i);
    const auto c = impostors.points.row(batch_indices[i]);
    attach_sum += squared_distance(y, c);
    if (lambda == 0.0) continue;
    auto gy = result.gradients.d_embeddings.row(i);
    auto gc = result.gradients.d_impostors.row(batch_indices[i]);
    const double coeff = 2.0 * lambda * inv_batch;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = y[k] - c[k];
      gy[k] += coeff * diff;
      gc[k] -= coeff * diff;
    }
  }
  result.value.attachment_term = attach_sum * inv_batch;
  result.value.total = result.value.classification_term + lambda * result.value.attachment_term;
  return result;
}

}  // namespace impostor
