#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "impostor/error.hpp"
#include "impostor/matrix.hpp"
#include "oracles.hpp"

namespace impostor {
namespace {

TEST(Matrix, RowMajorLayout) {
  Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_EQ(m.row(1)[2], 6.0);
  m.row(0)[1] = 9.0;
  EXPECT_EQ(m.values()[1], 9.0);
}

TEST(Matrix, GatherRowsKeepsOrder) {
  const Matrix m(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx{2, 0, 2};
  const Matrix g = m.gather_rows(idx);
  EXPECT_EQ(g, Matrix(3, 2, std::vector<double>{5, 6, 1, 2, 5, 6}));
}

TEST(Matrix, RejectsMismatchedValues) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ContractError);
}

TEST(Matrix, AllFinite) {
  Matrix m(2, 2, 1.0);
  EXPECT_TRUE(m.all_finite());
  m(1, 1) = std::nan("");
  EXPECT_FALSE(m.all_finite());
}

TEST(Distance, MatchesLongDouble) {
  std::mt19937_64 rng(3);
  for (std::size_t d : {1u, 3u, 4u, 7u, 16u, 33u}) {
    const Matrix a = oracle::random_matrix(2, d, rng);
    long double want = 0;
    for (std::size_t k = 0; k < d; ++k) want += (static_cast<long double>(a(0, k)) - a(1, k)) * (a(0, k) - a(1, k));
    EXPECT_NEAR(squared_distance(a.row(0), a.row(1)), static_cast<double>(want), 1e-12 * (1 + want)) << d;
    EXPECT_NEAR(l2_norm(a.row(0)) * l2_norm(a.row(0)), dot(a.row(0), a.row(0)), 1e-12);
  }
}

TEST(Distance, ZeroForIdenticalRows) {
  const std::vector<double> v{0.1, -2.0, 3.5, 1e10, -1e-10};
  EXPECT_EQ(squared_distance(v, v), 0.0);
}

}  // namespace
}  // namespace impostor
