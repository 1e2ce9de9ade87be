#include "impostor/pq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "impostor/error.hpp"

namespace impostor {

namespace {

std::size_t nearest_row(const Matrix& centroids, std::span<const double> x, double* best_dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.rows(); ++j) {
    const double d = squared_distance(x, centroids.row(j));
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy_n(points.row(first).begin(), points.cols(), centroids.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (d2[chosen] == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);
    }
    std::copy_n(points.row(chosen).begin(), points.cols(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  require(k >= 1, "kmeans: k must be positive");
  require(n >= k, "kmeans: need at least k points (N >= k)");
  require(points.all_finite(), "kmeans: non-finite point");

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids = kmeans_plus_plus(points, k, rng);
  result.assignments.assign(n, std::numeric_limits<std::size_t>::max());

  std::vector<double> point_dist(n);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iters, 1); ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = nearest_row(result.centroids, points.row(i), &point_dist[i]);
      if (a != result.assignments[i]) changed = true;
      result.assignments[i] = a;
      objective += point_dist[i];
    }
    result.objective_history.push_back(objective);
    result.objective = objective;
    result.iterations = iter + 1;
    if (!changed || iter + 1 == max_iters) break;

    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(result.assignments[i]);
      const auto p = points.row(i);
      for (std::size_t c = 0; c < dim; ++c) s[c] += p[c];
      ++counts[result.assignments[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      auto c = result.centroids.row(j);
      const auto s = sums.row(j);
      for (std::size_t t = 0; t < dim; ++t) c[t] = s[t] / static_cast<double>(counts[j]);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      // Move the empty centroid onto the worst-served point.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(points.row(i), result.centroids.row(result.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy_n(points.row(far).begin(), dim, result.centroids.row(j).begin());
      --counts[result.assignments[far]];
      result.assignments[far] = j;
      counts[j] = 1;
    }
  }
  return result;
}

PqCodebook::PqCodebook(std::size_t dim, std::size_t m, std::size_t k, std::vector<Matrix> sub_centroids)
    : dim_(dim), m_(m), k_(k), sub_centroids_(std::move(sub_centroids)) {
  require(m >= 1 && dim >= 1 && dim % m == 0, "PqCodebook: dimension must be divisible by m");
  require(k >= 1 && k <= 65536, "PqCodebook: k must be in [1, 65536]");
  require(sub_centroids_.size() == m, "PqCodebook: one centroid matrix per subspace required");
  for (const auto& c : sub_centroids_) {
    require(c.rows() == k && c.cols() == dim / m, "PqCodebook: centroid matrix has wrong shape");
    require(c.all_finite(), "PqCodebook: non-finite centroid");
  }
}

namespace {

Matrix subspace_slice(const Matrix& vectors, std::size_t s, std::size_t sub_dim) {
  Matrix slice(vectors.rows(), sub_dim);
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto row = vectors.row(i);
    std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(s * sub_dim), sub_dim, slice.row(i).begin());
  }
  return slice;
}

}  // namespace

CodebookTraining train_codebook(const Matrix& vectors, std::size_t m, std::size_t k, std::uint64_t seed,
                                std::size_t max_iters) {
  require(m >= 1 && vectors.cols() % m == 0,
          "train_codebook: dimension " + std::to_string(vectors.cols()) + " is not divisible by m=" +
              std::to_string(m));
  require(vectors.rows() >= k, "train_codebook: need at least k vectors");
  const std::size_t sub_dim = vectors.cols() / m;
  CodebookTraining out;
  std::vector<Matrix> centroids;
  for (std::size_t s = 0; s < m; ++s) {
    KMeansResult km = kmeans(subspace_slice(vectors, s, sub_dim), k, seed, max_iters);
    out.subspace_objectives.push_back(km.objective);
    centroids.push_back(std::move(km.centroids));
  }
  out.codebook = PqCodebook(vectors.cols(), m, k, std::move(centroids));
  return out;
}

CodebookTraining train_codebook(const ImpostorSet& impostors, std::size_t m, std::size_t k,
                                std::uint64_t seed, std::size_t max_iters) {
  impostors.validate();
  return train_codebook(impostors.points, m, k, seed, max_iters);
}

PqCodes encode(const PqCodebook& codebook, const Matrix& vectors) {
  require(vectors.cols() == codebook.dim(), "encode: dimension mismatch");
  const std::size_t m = codebook.subspaces();
  const std::size_t sub_dim = codebook.sub_dim();
  PqCodes codes{vectors.rows(), m, std::vector<std::uint16_t>(vectors.rows() * m)};
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto v = vectors.row(i);
    for (std::size_t s = 0; s < m; ++s) {
      const auto slice = v.subspan(s * sub_dim, sub_dim);
      codes.values[i * m + s] = static_cast<std::uint16_t>(nearest_row(codebook.centroids(s), slice));
    }
  }
  return codes;
}

Matrix decode(const PqCodebook& codebook, const PqCodes& codes) {
  require(codes.subspaces == codebook.subspaces(), "decode: code width does not match codebook");
  require(codes.values.size() == codes.count * codes.subspaces, "decode: malformed code array");
  const std::size_t sub_dim = codebook.sub_dim();
  Matrix out(codes.count, codebook.dim());
  for (std::size_t i = 0; i < codes.count; ++i) {
    auto row = out.row(i);
    const auto code = codes.code(i);
    for (std::size_t s = 0; s < codes.subspaces; ++s) {
      require(code[s] < codebook.centroids_per_subspace(), "decode: code out of range");
      const auto c = codebook.centroid(s, code[s]);
      std::copy(c.begin(), c.end(), row.begin() + static_cast<std::ptrdiff_t>(s * sub_dim));
    }
  }
  return out;
}

Matrix adc_distance_table(std::span<const double> y, const PqCodebook& codebook) {
  require(y.size() == codebook.dim(), "adc_distance_table: dimension mismatch");
  const std::size_t m = codebook.subspaces();
  const std::size_t k = codebook.centroids_per_subspace();
  const std::size_t sub_dim = codebook.sub_dim();
  Matrix table(m, k);
  for (std::size_t s = 0; s < m; ++s) {
    const auto slice = y.subspan(s * sub_dim, sub_dim);
    for (std::size_t j = 0; j < k; ++j) table(s, j) = squared_distance(slice, codebook.centroid(s, j));
  }
  return table;
}

double adc_distance(const Matrix& table, std::span<const std::uint16_t> code) {
  require(code.size() == table.rows(), "adc_distance: code width does not match table");
  double sum = 0.0;
  for (std::size_t s = 0; s < code.size(); ++s) {
    require(code[s] < table.cols(), "adc_distance: code out of range");
    sum += table(s, code[s]);
  }
  return sum;
}

ImpostorSet CompressedImpostors::decode() const {
  return ImpostorSet{impostor::decode(codebook, codes), labels, class_count, true};
}

void CompressedImpostors::validate() const {
  require(codes.count >= 1, "CompressedImpostors: empty code set");
  require(codes.subspaces == codebook.subspaces(), "CompressedImpostors: code width mismatch");
  require(codes.values.size() == codes.count * codes.subspaces, "CompressedImpostors: malformed codes");
  require(labels.size() == codes.count, "CompressedImpostors: label count mismatch");
  for (auto v : codes.values) {
    require(v < codebook.centroids_per_subspace(), "CompressedImpostors: code out of range");
  }
  for (auto l : labels) require(l < class_count, "CompressedImpostors: label out of range");
}

CompressedImpostors compress(const ImpostorSet& impostors, std::size_t m, std::size_t k, std::uint64_t seed) {
  CodebookTraining trained = train_codebook(impostors, m, k, seed);
  PqCodes codes = encode(trained.codebook, impostors.points);
  return CompressedImpostors{std::move(trained.codebook), std::move(codes), impostors.labels,
                             impostors.class_count};
}

ClassDistribution classify_compressed(std::span<const double> y, const PqCodebook& codebook,
                                      const PqCodes& codes, std::span<const Label> labels,
                                      std::size_t class_count, const KernelParams& params) {
  require(codes.count >= 1, "classify_compressed: empty impostor set");
  require(labels.size() == codes.count, "classify_compressed: label count mismatch");
  require(codes.subspaces == codebook.subspaces(), "classify_compressed: code width mismatch");
  const Matrix table = adc_distance_table(y, codebook);
  const std::size_t k = codebook.centroids_per_subspace();
  for (auto v : codes.values) require(v < k, "classify_compressed: code out of range");
  std::vector<double> dists(codes.count);
  for (std::size_t i = 0; i < codes.count; ++i) {
    const auto code = codes.code(i);
    double sum = 0.0;
    for (std::size_t s = 0; s < code.size(); ++s) sum += table(s, code[s]);
    dists[i] = sum;
  }
  return classify_from_squared_distances(dists, labels, class_count, params);
}

ClassDistribution classify_compressed(std::span<const double> y, const CompressedImpostors& impostors,
                                      const KernelParams& params) {
  return classify_compressed(y, impostors.codebook, impostors.codes, impostors.labels,
                             impostors.class_count, params);
}

}  // namespace impostor
