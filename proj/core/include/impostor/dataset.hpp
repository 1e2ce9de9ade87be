#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "impostor/matrix.hpp"
#include "impostor/rbf.hpp"

namespace impostor {

/// M vectors of width `dim` with integer class labels in [0, class_count).
struct LabeledEmbeddingSet {
  Matrix vectors;
  std::vector<Label> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }

  /// Throws ContractError naming the first offending record.
  void validate() const;
  /// Number of examples per class, indexed by label.
  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const LabeledEmbeddingSet&, const LabeledEmbeddingSet&) = default;
};

enum class DataErrorCode {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  label_out_of_range,
  non_finite,
  checksum_mismatch,
  malformed,
};

const char* to_string(DataErrorCode code) noexcept;

/// Failure while reading or writing a dataset or model file.
class DataError : public std::runtime_error {
 public:
  DataError(DataErrorCode code, const std::string& message, std::int64_t record = -1);

  DataErrorCode code() const noexcept { return code_; }
  /// Offending record index, or -1 when the error is not tied to a record.
  std::int64_t record() const noexcept { return record_; }

 private:
  DataErrorCode code_;
  std::int64_t record_;
};

inline constexpr char kDatasetMagic[4] = {'I', 'M', 'P', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

/// Dataset file, little-endian:
///   "IMPD" | version u32 | M u32 | dim u32 | L u32 | M x (label u32, dim x f32)
std::vector<std::uint8_t> serialize_dataset(const LabeledEmbeddingSet& set);
LabeledEmbeddingSet parse_dataset(const std::vector<std::uint8_t>& bytes);

void write_dataset(const std::string& path, const LabeledEmbeddingSet& set);
LabeledEmbeddingSet read_dataset(const std::string& path);

}  // namespace impostor
