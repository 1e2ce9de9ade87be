#include "impostor/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "impostor/error.hpp"

namespace impostor {

KernelParams::KernelParams(double sigma) : sigma_(sigma), inv_two_sigma_sq_(0.0) {
  require(std::isfinite(sigma) && sigma > 0.0, "KernelParams: sigma must be positive and finite");
  inv_two_sigma_sq_ = 1.0 / (2.0 * sigma * sigma);
  require(std::isfinite(inv_two_sigma_sq_), "KernelParams: sigma too small to represent 1/(2 sigma^2)");
}

bool ClassDistribution::is_valid() const noexcept {
  if (probs.empty()) return false;
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    total += p;
  }
  return std::abs(total - 1.0) <= 1e-9;
}

void ImpostorSet::validate() const {
  require(points.rows() >= 1, "ImpostorSet: at least one impostor is required");
  require(labels.size() == points.rows(), "ImpostorSet: label count does not match point count");
  require(class_count >= 1, "ImpostorSet: class_count must be positive");
  for (std::size_t j = 0; j < labels.size(); ++j) {
    require(labels[j] < class_count,
            "ImpostorSet: label out of range at impostor " + std::to_string(j));
  }
  require(points.all_finite(), "ImpostorSet: non-finite coordinate");
}

double kernel_weight(std::span<const double> y, std::span<const double> c, const KernelParams& params) {
  require(y.size() == c.size(), "kernel_weight: dimension mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) {
    require(std::isfinite(y[i]) && std::isfinite(c[i]), "kernel_weight: non-finite input");
  }
  return std::exp(-squared_distance(y, c) * params.inv_two_sigma_sq());
}

ClassDistribution classify_from_squared_distances(std::span<const double> squared_distances,
                                                  std::span<const Label> labels,
                                                  std::size_t class_count,
                                                  const KernelParams& params,
                                                  std::optional<std::size_t> exclude) {
  const std::size_t m = squared_distances.size();
  require(m >= 1, "classify: empty impostor set");
  require(labels.size() == m, "classify: label count does not match distance count");
  require(class_count >= 1, "classify: class_count must be positive");
  if (exclude) {
    require(*exclude < m, "classify: exclude index out of range");
    require(m >= 2, "classify: exclusion needs at least two impostors");
  }

  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    if (exclude && *exclude == j) continue;
    min_dist = std::min(min_dist, squared_distances[j]);
  }
  require(std::isfinite(min_dist), "classify: non-finite distance");

  ClassDistribution out{std::vector<double>(class_count, 0.0)};
  double total = 0.0;
  const double scale = params.inv_two_sigma_sq();
  for (std::size_t j = 0; j < m; ++j) {
    if (exclude && *exclude == j) continue;
    const double w = std::exp(-(squared_distances[j] - min_dist) * scale);
    require(labels[j] < class_count, "classify: label out of range");
    out.probs[labels[j]] += w;
    total += w;
  }
  // total >= 1: the nearest impostor contributes exp(0).
  for (double& p : out.probs) p /= total;
  return out;
}

ClassDistribution classify(std::span<const double> y, const ImpostorSet& impostors,
                           const KernelParams& params, std::optional<std::size_t> exclude) {
  require(impostors.size() >= 1, "classify: empty impostor set");
  require(y.size() == impostors.dim(), "classify: dimension mismatch");
  std::vector<double> dists(impostors.size());
  for (std::size_t j = 0; j < impostors.size(); ++j) {
    dists[j] = squared_distance(y, impostors.points.row(j));
  }
  return classify_from_squared_distances(dists, impostors.labels, impostors.class_count, params,
                                         exclude);
}

std::vector<ClassDistribution> classify_batch(const Matrix& queries, const ImpostorSet& impostors,
                                              const KernelParams& params, std::size_t threads) {
  std::vector<ClassDistribution> out(queries.rows());
  threads = std::max<std::size_t>(1, std::min(threads, queries.rows()));
  // Queries are taken in groups and impostors in cache-sized blocks, so each
  // block is reused across the group instead of being streamed once per query.
  // Every distance is the same squared_distance() call classify() makes.
  constexpr std::size_t kQueryGroup = 32;
  const std::size_t m = impostors.size();
  const std::size_t row_bytes = sizeof(double) * std::max<std::size_t>(1, impostors.dim());
  const std::size_t block = std::max<std::size_t>(1, (256 * 1024) / row_bytes);
  auto work = [&](std::size_t begin, std::size_t end) {
    if (queries.cols() != impostors.dim() || m == 0) {
      for (std::size_t i = begin; i < end; ++i) out[i] = classify(queries.row(i), impostors, params);
      return;
    }
    std::vector<double> dists(kQueryGroup * m);
    for (std::size_t g = begin; g < end; g += kQueryGroup) {
      const std::size_t rows = std::min(kQueryGroup, end - g);
      for (std::size_t j0 = 0; j0 < m; j0 += block) {
        const std::size_t j1 = std::min(m, j0 + block);
        for (std::size_t r = 0; r < rows; ++r) {
          const auto y = queries.row(g + r);
          double* d = dists.data() + r * m;
          for (std::size_t j = j0; j < j1; ++j) d[j] = squared_distance(y, impostors.points.row(j));
        }
      }
      for (std::size_t r = 0; r < rows; ++r) {
        out[g + r] = classify_from_squared_distances({dists.data() + r * m, m}, impostors.labels,
                                                     impostors.class_count, params);
      }
    }
  };
  if (threads <= 1) {
    work(0, queries.rows());
    return out;
  }
  // Exceptions cannot escape a jthread; validate once up front instead.
  require(queries.cols() == impostors.dim(), "classify_batch: dimension mismatch");
  require(impostors.size() >= 1, "classify_batch: empty impostor set");
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (queries.rows() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(queries.rows(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
  }
  return out;
}

Label predict_label(const ClassDistribution& dist) {
  require(!dist.probs.empty(), "predict_label: empty distribution");
  // max_element returns the first maximum, i.e. the smallest class id on ties.
  return static_cast<Label>(std::max_element(dist.probs.begin(), dist.probs.end()) -
                            dist.probs.begin());
}

}  // namespace impostor
