#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "impostor/dataset.hpp"
#include "impostor/error.hpp"

namespace impostor {
namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& b, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(b, bits);
}

// Two records of width 2, L = 3, written byte by byte.
std::vector<std::uint8_t> handmade() {
  std::vector<std::uint8_t> b{'I', 'M', 'P', 'D'};
  put_u32(b, 1);
  put_u32(b, 2);
  put_u32(b, 2);
  put_u32(b, 3);
  put_u32(b, 2);
  put_f32(b, 0.5f);
  put_f32(b, -1.25f);
  put_u32(b, 0);
  put_f32(b, 3.0f);
  put_f32(b, 1e-3f);
  return b;
}

DataErrorCode code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_dataset(bytes);
  } catch (const DataError& e) {
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded";
  return DataErrorCode::io;
}

TEST(Dataset, ParsesHandmadeFile) {
  const LabeledEmbeddingSet s = parse_dataset(handmade());
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 2u);
  EXPECT_EQ(s.class_count, 3u);
  EXPECT_EQ(s.labels, (std::vector<Label>{2, 0}));
  EXPECT_EQ(s.vectors(0, 1), -1.25);
  EXPECT_EQ(s.vectors(1, 1), static_cast<double>(1e-3f));
  EXPECT_EQ(serialize_dataset(s), handmade());
}

TEST(Dataset, RoundTripsThroughFile) {
  LabeledEmbeddingSet s;
  s.vectors = Matrix(3, 2, std::vector<double>{1, 2, 3, 4, 5, 0.25});
  s.labels = {0, 1, 1};
  s.class_count = 2;
  const auto path = std::filesystem::temp_directory_path() / "impostor_dataset_roundtrip.impd";
  write_dataset(path.string(), s);
  EXPECT_EQ(read_dataset(path.string()), s);
  std::filesystem::remove(path);
}

TEST(Dataset, MissingFileIsIoError) {
  try {
    read_dataset("/nonexistent/dir/x.impd");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), DataErrorCode::io);
  }
}

TEST(Dataset, BadMagic) {
  auto b = handmade();
  b[3] = 'X';
  EXPECT_EQ(code_of(b), DataErrorCode::bad_magic);
}

TEST(Dataset, VersionMismatch) {
  auto b = handmade();
  b[4] = 2;
  EXPECT_EQ(code_of(b), DataErrorCode::version_mismatch);
}

TEST(Dataset, TruncationReportsCompleteRecords) {
  auto b = handmade();
  b.resize(b.size() - 3);
  try {
    parse_dataset(b);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), DataErrorCode::truncated);
    EXPECT_EQ(e.record(), 1);
  }
  b.resize(10);
  EXPECT_EQ(code_of(b), DataErrorCode::truncated);
}

TEST(Dataset, LabelOutOfRangeNamesRecord) {
  auto b = handmade();
  b[32] = 3;  // label of record 1
  try {
    parse_dataset(b);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), DataErrorCode::label_out_of_range);
    EXPECT_EQ(e.record(), 1);
  }
}

TEST(Dataset, NonFiniteNamesRecord) {
  auto b = handmade();
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(b.data() + 24, &inf, 4);  // record 0, second coordinate
  try {
    parse_dataset(b);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), DataErrorCode::non_finite);
    EXPECT_EQ(e.record(), 0);
  }
}

TEST(Dataset, TrailingBytesAreMalformed) {
  auto b = handmade();
  b.push_back(0);
  EXPECT_EQ(code_of(b), DataErrorCode::malformed);
}

TEST(Dataset, ClassCounts) {
  const LabeledEmbeddingSet s = parse_dataset(handmade());
  EXPECT_EQ(s.class_counts(), (std::vector<std::size_t>{1, 0, 1}));
}

TEST(Dataset, ValidateRejectsBadSets) {
  LabeledEmbeddingSet s;
  s.vectors = Matrix(2, 1, 0.0);
  s.labels = {0};
  s.class_count = 1;
  EXPECT_THROW(s.validate(), ContractError);
  s.labels = {0, 1};
  EXPECT_THROW(s.validate(), ContractError);
  EXPECT_THROW(serialize_dataset(s), ContractError);
}

}  // namespace
}  // namespace impostor
