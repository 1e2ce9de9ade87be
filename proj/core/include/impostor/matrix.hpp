#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace impostor {

/// Dense row-major matrix of doubles. Rows are contiguous, so a row can be
/// handed out as a span and treated as a d-vector.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void fill(double v);
  bool all_finite() const noexcept;

  /// Rows selected by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Squared Euclidean distance. Accumulates in four fixed lanes so the
/// result is reproducible and the loop still vectorizes.
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;

double l2_norm(std::span<const double> a) noexcept;

}  // namespace impostor
