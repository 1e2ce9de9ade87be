#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace impostor::oracle {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

std::vector<Real> to_real(std::span<const double> v) { return {v.begin(), v.end()}; }

std::vector<std::vector<Real>> to_real(const Matrix& m) {
  std::vector<std::vector<Real>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(to_real(m.row(r)));
  return out;
}

std::vector<Real> class_probs(std::span<const Real> y, const std::vector<std::vector<Real>>& points,
                              std::span<const Label> labels, std::size_t class_count, Real sigma,
                              std::optional<std::size_t> exclude) {
  std::vector<Real> logits(points.size(), -std::numeric_limits<Real>::infinity());
  Real best = -std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (exclude && *exclude == j) continue;
    Real d2 = 0;
    for (std::size_t k = 0; k < y.size(); ++k) d2 += (y[k] - points[j][k]) * (y[k] - points[j][k]);
    logits[j] = -d2 / (2 * sigma * sigma);
    best = std::max(best, logits[j]);
  }
  std::vector<Real> probs(class_count, 0);
  Real total = 0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (exclude && *exclude == j) continue;
    const Real w = std::exp(logits[j] - best);
    probs[labels[j]] += w;
    total += w;
  }
  for (Real& p : probs) p /= total;
  return probs;
}

std::vector<Real> class_probs(std::span<const double> y, const Matrix& points, std::span<const Label> labels,
                              std::size_t class_count, double sigma, std::optional<std::size_t> exclude) {
  const auto yr = to_real(y);
  return class_probs(yr, to_real(points), labels, class_count, sigma, exclude);
}

Real loose_loss(const std::vector<std::vector<Real>>& emb, std::span<const std::size_t> indices,
                std::span<const Label> labels, const std::vector<std::vector<Real>>& impostors,
                std::span<const Label> impostor_labels, std::size_t class_count, Real sigma, Real lambda) {
  Real total = 0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto p = class_probs(emb[i], impostors, impostor_labels, class_count, sigma, indices[i]);
    total -= std::log(p[labels[i]]);
    Real d2 = 0;
    for (std::size_t k = 0; k < emb[i].size(); ++k) {
      const Real diff = emb[i][k] - impostors[indices[i]][k];
      d2 += diff * diff;
    }
    total += lambda * d2;
  }
  return total / static_cast<Real>(emb.size());
}

std::vector<RealLayer> to_real(const Backbone& net) {
  std::vector<RealLayer> out;
  for (const DenseLayer& layer : net.layers()) {
    out.push_back(RealLayer{to_real(layer.weights), to_real(layer.bias), layer.activation == Activation::relu});
  }
  return out;
}

std::vector<Real> forward(const std::vector<RealLayer>& layers, std::vector<Real> x, Real passthrough_scale) {
  if (layers.empty()) {
    for (Real& v : x) v *= passthrough_scale;
    return x;
  }
  for (const RealLayer& layer : layers) {
    std::vector<Real> z(layer.bias);
    for (std::size_t o = 0; o < z.size(); ++o) {
      for (std::size_t i = 0; i < x.size(); ++i) z[o] += layer.weights[o][i] * x[i];
      if (layer.relu && z[o] < 0) z[o] = 0;
    }
    x = std::move(z);
  }
  return x;
}

Real min_abs_hidden_preactivation(const std::vector<RealLayer>& layers, std::vector<Real> x) {
  Real smallest = std::numeric_limits<Real>::infinity();
  for (const RealLayer& layer : layers) {
    std::vector<Real> z(layer.bias);
    for (std::size_t o = 0; o < z.size(); ++o) {
      for (std::size_t i = 0; i < x.size(); ++i) z[o] += layer.weights[o][i] * x[i];
      if (layer.relu) {
        smallest = std::min(smallest, std::fabs(z[o]));
        if (z[o] < 0) z[o] = 0;
      }
    }
    x = std::move(z);
  }
  return smallest;
}

Real decoded_squared_distance(std::span<const double> y, const PqCodebook& codebook,
                              std::span<const std::uint16_t> code) {
  const std::size_t sub = codebook.sub_dim();
  Real d2 = 0;
  for (std::size_t s = 0; s < codebook.subspaces(); ++s) {
    const auto c = codebook.centroid(s, code[s]);
    for (std::size_t k = 0; k < sub; ++k) {
      const Real diff = static_cast<Real>(y[s * sub + k]) - static_cast<Real>(c[k]);
      d2 += diff * diff;
    }
  }
  return d2;
}

std::size_t nearest_codeword(std::span<const double> slice, const Matrix& centroids) {
  std::size_t best = 0;
  Real best_d2 = std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < centroids.rows(); ++j) {
    Real d2 = 0;
    for (std::size_t k = 0; k < slice.size(); ++k) {
      const Real diff = static_cast<Real>(slice[k]) - static_cast<Real>(centroids(j, k));
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

}  // namespace impostor::oracle
