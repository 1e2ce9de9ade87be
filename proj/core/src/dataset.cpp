#include "impostor/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "binary_io.hpp"
#include "impostor/error.hpp"

namespace impostor {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorCode::io, "cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError(DataErrorCode::io, "read failure on '" + path + "'");
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorCode::io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrorCode::io, "write failure on '" + path + "'");
}

}  // namespace detail

const char* to_string(DataErrorCode code) noexcept {
  switch (code) {
    case DataErrorCode::io: return "io";
    case DataErrorCode::bad_magic: return "bad_magic";
    case DataErrorCode::version_mismatch: return "version_mismatch";
    case DataErrorCode::truncated: return "truncated";
    case DataErrorCode::label_out_of_range: return "label_out_of_range";
    case DataErrorCode::non_finite: return "non_finite";
    case DataErrorCode::checksum_mismatch: return "checksum_mismatch";
    case DataErrorCode::malformed: return "malformed";
  }
  return "unknown";
}

DataError::DataError(DataErrorCode code, const std::string& message, std::int64_t record)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), record_(record) {}

void LabeledEmbeddingSet::validate() const {
  require(vectors.rows() >= 1, "dataset: at least one record is required");
  require(labels.size() == vectors.rows(), "dataset: label count does not match vector count");
  require(class_count >= 1, "dataset: class_count must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < class_count, "dataset: label out of range at record " + std::to_string(i));
    for (double v : vectors.row(i)) {
      require(std::isfinite(v), "dataset: non-finite value at record " + std::to_string(i));
    }
  }
}

std::vector<std::size_t> LabeledEmbeddingSet::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (Label l : labels) {
    if (l < class_count) ++counts[l];
  }
  return counts;
}

std::vector<std::uint8_t> serialize_dataset(const LabeledEmbeddingSet& set) {
  set.validate();
  constexpr auto u32_max = std::numeric_limits<std::uint32_t>::max();
  require(set.size() <= u32_max && set.dim() <= u32_max && set.class_count <= u32_max,
          "dataset: shape exceeds the 32-bit header fields");
  detail::ByteWriter w;
  w.bytes(kDatasetMagic, 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u32(static_cast<std::uint32_t>(set.class_count));
  for (std::size_t i = 0; i < set.size(); ++i) {
    w.u32(set.labels[i]);
    for (double v : set.vectors.row(i)) w.f32(static_cast<float>(v));
  }
  return w.buffer();
}

LabeledEmbeddingSet parse_dataset(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  if (!r.bytes(magic, 4)) throw DataError(DataErrorCode::truncated, "file shorter than the magic tag");
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
    throw DataError(DataErrorCode::bad_magic, "not an IMPD dataset file");
  }
  std::uint32_t version = 0, count = 0, dim = 0, classes = 0;
  if (!r.scalar(version) || !r.scalar(count) || !r.scalar(dim) || !r.scalar(classes)) {
    throw DataError(DataErrorCode::truncated, "header is incomplete");
  }
  if (version != kDatasetVersion) {
    throw DataError(DataErrorCode::version_mismatch,
                    "unsupported dataset version " + std::to_string(version));
  }
  if (count == 0 || dim == 0 || classes == 0) {
    throw DataError(DataErrorCode::malformed, "M, dim and L must all be positive");
  }
  const std::uint64_t record_bytes = 4ull + 4ull * dim;
  if (r.remaining() < record_bytes * count) {
    throw DataError(DataErrorCode::truncated,
                    "expected " + std::to_string(count) + " records, file holds " +
                        std::to_string(r.remaining() / record_bytes),
                    static_cast<std::int64_t>(r.remaining() / record_bytes));
  }
  if (r.remaining() != record_bytes * count) {
    throw DataError(DataErrorCode::malformed, "trailing bytes after the last record");
  }

  LabeledEmbeddingSet set{Matrix(count, dim), std::vector<Label>(count), classes};
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t label = 0;
    r.scalar(label);
    if (label >= classes) {
      throw DataError(DataErrorCode::label_out_of_range,
                      "record " + std::to_string(i) + " has label " + std::to_string(label) +
                          " >= L=" + std::to_string(classes),
                      i);
    }
    set.labels[i] = label;
    auto row = set.vectors.row(i);
    for (std::uint32_t c = 0; c < dim; ++c) {
      float v = 0.0F;
      r.scalar(v);
      if (!std::isfinite(v)) {
        throw DataError(DataErrorCode::non_finite, "record " + std::to_string(i) + " has a non-finite value", i);
      }
      row[c] = v;
    }
  }
  return set;
}

void write_dataset(const std::string& path, const LabeledEmbeddingSet& set) {
  detail::write_file_bytes(path, serialize_dataset(set));
}

LabeledEmbeddingSet read_dataset(const std::string& path) {
  return parse_dataset(detail::read_file_bytes(path));
}

}  // namespace impostor
