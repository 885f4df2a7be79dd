#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "tsfn/matrix.hpp"
#include "tsfn/rng.hpp"

using tsfn::Matrix;
using tsfn::Rng;
using tsfn::SymmetricMatrix;
using tsfn::Vec;

TEST_CASE("splitmix64 matches the published reference outputs") {
  Rng r0(0);
  CHECK(r0.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(r0.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(r0.next_u64() == 0x06c45d188009454fULL);
  Rng r42(42);
  CHECK(r42.next_u64() == 0xbdd732262feb6e95ULL);
  CHECK(r42.next_u64() == 0x28efe333b266f103ULL);
}

TEST_CASE("rng streams are reproducible per seed") {
  Rng a(1234), b(1234), c(1235);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    double x = a.next_gaussian();
    same = same && (x == b.next_gaussian());
    diff = diff || (x != c.next_gaussian());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("gaussian draws have roughly standard moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.next_gaussian();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("next_below is in range and covers all residues") {
  Rng rng(5);
  bool seen[7] = {};
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = rng.next_below(7);
    REQUIRE(v < 7);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
  CHECK_THROWS_AS(rng.next_below(0), std::invalid_argument);
}

TEST_CASE("matrix product matches hand computation") {
  Matrix a(2, 3), b(3, 2);
  double va[] = {1, 2, 3, 4, 5, 6};
  double vb[] = {7, 8, 9, 10, 11, 12};
  for (int i = 0; i < 6; ++i) {
    a.data()[i] = va[i];
    b.data()[i] = vb[i];
  }
  Matrix c = a * b;
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);
  CHECK_THROWS_AS(b * Matrix(3, 3), std::invalid_argument);
}

TEST_CASE("transpose and apply are consistent") {
  Rng rng(3);
  Matrix a = Matrix::gaussian(4, 6, rng);
  Vec x = rng.gaussian_vector(6);
  Vec y1 = a.apply(x);
  Vec y2 = a.transposed().apply_transposed(x);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));

  Matrix att = a.transposed().transposed();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(att(i, j) == a(i, j));
}

TEST_CASE("symmetric matrix validates exact symmetry") {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.0 + 1e-12;
  m(1, 1) = 3.0;
  CHECK_THROWS_AS(SymmetricMatrix{m}, std::invalid_argument);

  SymmetricMatrix s = SymmetricMatrix::from_symmetrized(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s.dim() == 2);

  CHECK_THROWS_AS(SymmetricMatrix{Matrix(2, 3)}, std::invalid_argument);
  CHECK_THROWS_AS(SymmetricMatrix{Matrix()}, std::invalid_argument);
}

TEST_CASE("diagonal constructor and identity") {
  SymmetricMatrix d = SymmetricMatrix::diagonal({3.0, -1.0});
  CHECK(d(0, 0) == 3.0);
  CHECK(d(1, 1) == -1.0);
  CHECK(d(0, 1) == 0.0);
  Matrix i3 = Matrix::identity(3);
  CHECK(i3.frobenius_norm() == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("column accessors round trip") {
  Rng rng(8);
  Matrix a = Matrix::gaussian(5, 3, rng);
  Vec c1 = a.column(1);
  a.set_column(2, c1);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a(i, 2) == a(i, 1));
  CHECK_THROWS_AS(a.set_column(0, Vec(4)), std::invalid_argument);
}

TEST_CASE("from_rows rejects ragged input") {
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}),
                  std::invalid_argument);
  Matrix m = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("finiteness checks") {
  Matrix m(2, 2, 1.0);
  CHECK(m.is_finite());
  m(1, 1) = std::nan("");
  CHECK(!m.is_finite());
  CHECK(!tsfn::vec_is_finite({1.0, INFINITY}));
  CHECK(tsfn::vec_is_finite({1.0, -2.0}));
}

TEST_CASE("vector helpers match direct arithmetic") {
  Vec a{1.0, 2.0, 3.0}, b{4.0, 5.0, 6.0};
  CHECK(tsfn::vec_dot(a, b) == 32.0);
  CHECK(tsfn::vec_norm(a) == doctest::Approx(std::sqrt(14.0)));
  Vec y = b;
  tsfn::vec_axpy(2.0, a, y);
  CHECK(y[2] == 12.0);
  CHECK(tsfn::vec_sub(b, a)[0] == 3.0);
  CHECK(tsfn::vec_add(b, a)[0] == 5.0);
  CHECK_THROWS_AS(tsfn::vec_dot(a, Vec(2)), std::invalid_argument);
}
