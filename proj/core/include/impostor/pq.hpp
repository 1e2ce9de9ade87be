#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "impostor/matrix.hpp"
#include "impostor/rbf.hpp"

namespace impostor {

struct KMeansResult {
  Matrix centroids;  // k x D
  std::vector<std::size_t> assignments;
  /// Sum of squared distances after every assignment step; non-increasing.
  std::vector<double> objective_history;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeding. Stops after max_iters or when an
/// assignment step changes nothing. An empty cluster is moved onto the point
/// farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters = 50);

/// m sub-quantizers over contiguous coordinate slices, k centroids each.
class PqCodebook {
 public:
  PqCodebook() = default;
  PqCodebook(std::size_t dim, std::size_t m, std::size_t k, std::vector<Matrix> sub_centroids);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t subspaces() const noexcept { return m_; }
  std::size_t centroids_per_subspace() const noexcept { return k_; }
  std::size_t sub_dim() const noexcept { return m_ == 0 ? 0 : dim_ / m_; }
  /// Bytes per encoded vector: one per subspace when k <= 256, else two.
  std::size_t code_bytes() const noexcept { return m_ * (k_ <= 256 ? 1 : 2); }

  const Matrix& centroids(std::size_t subspace) const { return sub_centroids_.at(subspace); }
  std::span<const double> centroid(std::size_t subspace, std::size_t j) const {
    return sub_centroids_[subspace].row(j);
  }

  friend bool operator==(const PqCodebook&, const PqCodebook&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t m_ = 0;
  std::size_t k_ = 0;
  std::vector<Matrix> sub_centroids_;  // m matrices of k x sub_dim
};

/// M x m centroid indices, row-major.
struct PqCodes {
  std::size_t count = 0;
  std::size_t subspaces = 0;
  std::vector<std::uint16_t> values;

  std::span<const std::uint16_t> code(std::size_t i) const {
    return {values.data() + i * subspaces, subspaces};
  }

  friend bool operator==(const PqCodes&, const PqCodes&) = default;
};

struct CodebookTraining {
  PqCodebook codebook;
  std::vector<double> subspace_objectives;
};

/// Independent kmeans per subspace slice, each seeded with `seed`.
CodebookTraining train_codebook(const Matrix& vectors, std::size_t m, std::size_t k, std::uint64_t seed,
                                std::size_t max_iters = 50);
CodebookTraining train_codebook(const ImpostorSet& impostors, std::size_t m, std::size_t k,
                                std::uint64_t seed, std::size_t max_iters = 50);

/// Nearest sub-centroid per subspace; ties go to the lowest index.
PqCodes encode(const PqCodebook& codebook, const Matrix& vectors);
Matrix decode(const PqCodebook& codebook, const PqCodes& codes);

/// table(s, j) = squared distance between the s-th slice of y and centroid j.
Matrix adc_distance_table(std::span<const double> y, const PqCodebook& codebook);
double adc_distance(const Matrix& table, std::span<const std::uint16_t> code);

/// Impostor set held as PQ codes.
struct CompressedImpostors {
  PqCodebook codebook;
  PqCodes codes;
  std::vector<Label> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return codes.count; }
  std::size_t code_storage_bytes() const noexcept { return codes.count * codebook.code_bytes(); }
  std::size_t codebook_floats() const noexcept {
    return codebook.subspaces() * codebook.centroids_per_subspace() * codebook.sub_dim();
  }
  ImpostorSet decode() const;
  void validate() const;

  friend bool operator==(const CompressedImpostors&, const CompressedImpostors&) = default;
};

CompressedImpostors compress(const ImpostorSet& impostors, std::size_t m, std::size_t k, std::uint64_t seed);

/// RBF rule over compressed impostors, distances taken from the ADC table.
ClassDistribution classify_compressed(std::span<const double> y, const PqCodebook& codebook,
                                      const PqCodes& codes, std::span<const Label> labels,
                                      std::size_t class_count, const KernelParams& params);
ClassDistribution classify_compressed(std::span<const double> y, const CompressedImpostors& impostors,
                                      const KernelParams& params);

}  // namespace impostor
