#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tsfn/linalg.hpp"
#include "tsfn/matrix.hpp"
#include "tsfn/rng.hpp"

using tsfn::Matrix;
using tsfn::Rng;
using tsfn::SymmetricMatrix;
using tsfn::Vec;
namespace linalg = tsfn::linalg;

namespace {

SymmetricMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return SymmetricMatrix::from_symmetrized(Matrix::gaussian(n, n, rng));
}

double recon_tol(const SymmetricMatrix& h) {
  return 1e-8 * static_cast<double>(h.dim()) * std::max(1.0, h.matrix().max_abs());
}

Matrix reconstruct(const linalg::EigenDecomposition& e) {
  std::size_t n = e.eigenvalues.size();
  Matrix scaled = e.eigenvectors;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= e.eigenvalues[j];
  return scaled * e.eigenvectors.transposed();
}

}  // namespace

TEST_CASE("sym_eig on a diagonal matrix") {
  auto e = linalg::sym_eig(SymmetricMatrix::diagonal({2.0, -1.0}));
  CHECK(e.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(e.eigenvalues[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::fabs(e.eigenvectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(e.eigenvectors(1, 1)) == doctest::Approx(1.0));
  CHECK(e.eigenvectors(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("sym_eig on the identity") {
  auto e = linalg::sym_eig(SymmetricMatrix::identity(3));
  for (double l : e.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-14));
  Matrix g = e.eigenvectors.transposed() * e.eigenvectors;
  CHECK((g - Matrix::identity(3)).max_abs() < 1e-12);
}

TEST_CASE("sym_eig matches the characteristic polynomial oracle") {
  SymmetricMatrix h = random_symmetric(8, 42);
  auto e = linalg::sym_eig(h);

  auto roots = oracle::sym_eigenvalues_charpoly(h);  // ascending
  Vec got = e.eigenvalues;
  std::sort(got.begin(), got.end());
  REQUIRE(got.size() == roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i)
    CHECK(got[i] == doctest::Approx(roots[i]).epsilon(1e-10));

  // sorted by descending magnitude
  for (std::size_t i = 0; i + 1 < e.eigenvalues.size(); ++i)
    CHECK(std::fabs(e.eigenvalues[i]) >= std::fabs(e.eigenvalues[i + 1]));

  // reconstruction and orthogonality
  CHECK((reconstruct(e) - h.matrix()).max_abs() < recon_tol(h));
  Matrix g = e.eigenvectors.transposed() * e.eigenvectors;
  CHECK((g - Matrix::identity(8)).max_abs() < recon_tol(h));

  // eigenvectors match inverse iteration up to the shared sign convention
  for (std::size_t j = 0; j < 8; ++j) {
    Vec v = oracle::eigenvector_inverse_iteration(h, e.eigenvalues[j]);
    for (std::size_t i = 0; i < 8; ++i)
      CHECK(e.eigenvectors(i, j) == doctest::Approx(v[i]).epsilon(1e-8));
  }
}

TEST_CASE("sym_eig handles larger matrices and near-degenerate spectra") {
  SymmetricMatrix h = random_symmetric(40, 1001);
  auto e = linalg::sym_eig(h);
  CHECK((reconstruct(e) - h.matrix()).max_abs() < recon_tol(h));

  // repeated eigenvalues: block diag(2, 2, -3) built from a rotation
  Matrix q = linalg::sym_eig(random_symmetric(3, 5)).eigenvectors;
  Matrix lam(3, 3);
  lam(0, 0) = 2.0;
  lam(1, 1) = 2.0;
  lam(2, 2) = -3.0;
  Matrix m = q * lam * q.transposed();
  auto e2 = linalg::sym_eig(SymmetricMatrix::from_symmetrized(m));
  CHECK(e2.eigenvalues[0] == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(e2.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e2.eigenvalues[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((reconstruct(e2) - m).max_abs() < 1e-10);
}

TEST_CASE("sym_eig rejects non-finite input") {
  Matrix m(2, 2, 0.0);
  m(0, 1) = m(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(linalg::sym_eig(SymmetricMatrix{m}), std::invalid_argument);
}

TEST_CASE("eigenvalue magnitudes equal singular values") {
  for (std::uint64_t seed : {2ULL, 9ULL, 21ULL}) {
    SymmetricMatrix h = random_symmetric(10, seed);
    auto e = linalg::sym_eig(h);
    auto s = linalg::svd(h.matrix());
    Vec mags(e.eigenvalues.size());
    for (std::size_t i = 0; i < mags.size(); ++i)
      mags[i] = std::fabs(e.eigenvalues[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    for (std::size_t i = 0; i < mags.size(); ++i)
      CHECK(mags[i] == doctest::Approx(s.singular_values[i]).epsilon(1e-8));
  }
}

TEST_CASE("svd invariants on assorted shapes") {
  Rng rng(14);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{7, 4},
                      {3, 6},
                      {5, 5}}) {
    Matrix a = Matrix::gaussian(m, n, rng);
    auto s = linalg::svd(a);
    std::size_t p = std::min(m, n);
    REQUIRE(s.singular_values.size() == p);
    for (std::size_t i = 0; i + 1 < p; ++i)
      CHECK(s.singular_values[i] >= s.singular_values[i + 1]);
    CHECK(s.rank == p);

    Matrix gu = s.u.transposed() * s.u;
    Matrix gv = s.v.transposed() * s.v;
    CHECK((gu - Matrix::identity(p)).max_abs() < 1e-10);
    CHECK((gv - Matrix::identity(p)).max_abs() < 1e-10);

    Matrix us = s.u;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < m; ++i) us(i, j) *= s.singular_values[j];
    CHECK((us * s.v.transposed() - a).max_abs() < 1e-10);
  }
}

TEST_CASE("svd of a rank-deficient matrix keeps orthonormal columns") {
  Rng rng(33);
  Matrix g1 = Matrix::gaussian(6, 2, rng);
  Matrix g2 = Matrix::gaussian(2, 5, rng);
  Matrix a = g1 * g2;  // rank 2
  auto s = linalg::svd(a);
  CHECK(s.rank == 2);
  CHECK(s.singular_values[2] < 1e-10 * s.singular_values[0]);
  Matrix gu = s.u.transposed() * s.u;
  CHECK((gu - Matrix::identity(5)).max_abs() < 1e-10);
}

TEST_CASE("norms against closed forms and the power oracle") {
  Matrix d(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  auto np = linalg::norms(d);
  CHECK(np.spectral == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(np.frobenius == doctest::Approx(5.0).epsilon(1e-12));

  auto zero = linalg::norms(Matrix(3, 3));
  CHECK(zero.spectral == 0.0);
  CHECK(zero.frobenius == 0.0);

  Rng rng(1);
  Matrix a = Matrix::gaussian(5, 4, rng);
  auto na = linalg::norms(a);
  CHECK(na.spectral ==
        doctest::Approx(oracle::spectral_norm_power(a)).epsilon(1e-10));
  double fs = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) fs += a(i, j) * a(i, j);
  CHECK(na.frobenius == doctest::Approx(std::sqrt(fs)).epsilon(1e-13));
}

TEST_CASE("abs_pinv_truncated on a diagonal matrix") {
  SymmetricMatrix h = SymmetricMatrix::diagonal({2.0, -1.0, 1e-9});
  auto [pinv, ts] = linalg::abs_pinv_truncated(h, 1e-3);
  CHECK(ts.k == 2);
  CHECK(ts.kappa_eff == doctest::Approx(2.0 / 1e-3));
  CHECK(pinv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pinv(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pinv(2, 2) == doctest::Approx(0.0));
  CHECK(pinv(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("abs_pinv_truncated of the identity is the identity") {
  auto [pinv, ts] = linalg::abs_pinv_truncated(SymmetricMatrix::identity(4), 0.5);
  CHECK(ts.k == 4);
  CHECK((pinv - Matrix::identity(4)).max_abs() < 1e-13);
}

TEST_CASE("abs_pinv_truncated matches an oracle filter at k=4") {
  SymmetricMatrix h = random_symmetric(8, 7);
  auto roots = oracle::sym_eigenvalues_charpoly(h);
  Vec mags(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) mags[i] = std::fabs(roots[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // just below |lambda_4| so both sides retain exactly four pairs
  double threshold = mags[3] - 1e-6 * (mags[3] - mags[4]);

  Matrix want(8, 8);
  for (double r : roots) {
    if (std::fabs(r) < threshold) continue;
    Vec v = oracle::eigenvector_inverse_iteration(h, r);
    double w = 1.0 / std::fabs(r);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) want(i, j) += w * v[i] * v[j];
  }

  auto [pinv, ts] = linalg::abs_pinv_truncated(h, threshold);
  CHECK(ts.k == 4);
  CHECK(ts.kappa_eff == doctest::Approx(mags[0] / threshold).epsilon(1e-9));
  CHECK((pinv - want).max_abs() < 1e-8);
  for (double l : ts.eigenvalues) CHECK(std::fabs(l) >= threshold);
}

TEST_CASE("abs_pinv sign structure on the retained subspace") {
  SymmetricMatrix h = random_symmetric(6, 19);
  auto e = linalg::sym_eig(h);
  double thr = 1e-8 * std::fabs(e.eigenvalues[0]);
  auto [pinv, ts] = linalg::abs_pinv_truncated(h, thr);
  REQUIRE(ts.k == 6);
  Matrix p = pinv * h.matrix();
  // P s_i = sign(lambda_i) s_i
  for (std::size_t j = 0; j < 6; ++j) {
    Vec s = e.eigenvectors.column(j);
    Vec ps = p.apply(s);
    double sign = e.eigenvalues[j] >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(ps[i] == doctest::Approx(sign * s[i]).epsilon(1e-9));
  }
}

TEST_CASE("abs_pinv_truncated error cases") {
  SymmetricMatrix h = SymmetricMatrix::diagonal({1.0, 2.0});
  CHECK_THROWS_AS(linalg::abs_pinv_truncated(h, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(linalg::abs_pinv_truncated(h, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(linalg::abs_pinv_truncated(h, 10.0), std::domain_error);
}

TEST_CASE("low_rank_inverse on diagonal input") {
  Matrix a(3, 3);
  a(0, 0) = 4.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  auto lri = linalg::low_rank_inverse(a, 2);
  CHECK(lri.unique);
  CHECK(lri.z(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(lri.z(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lri.z(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("low_rank_inverse of the identity is a rank-r projector") {
  for (std::size_t r : {1u, 2u, 3u}) {
    auto lri = linalg::low_rank_inverse(Matrix::identity(3), r);
    if (r < 3) CHECK(!lri.unique);
    Matrix z2 = lri.z * lri.z;
    CHECK((z2 - lri.z).max_abs() < 1e-12);
    double tr = 0.0;
    for (std::size_t i = 0; i < 3; ++i) tr += lri.z(i, i);
    CHECK(tr == doctest::Approx(static_cast<double>(r)).epsilon(1e-12));
  }
}

TEST_CASE("low_rank_inverse beats random rank-r competitors") {
  Rng rng(3);
  Matrix g = Matrix::gaussian(6, 6, rng);
  Matrix a = g * g.transposed();  // PSD, full rank almost surely
  const std::size_t r = 3;
  auto lri = linalg::low_rank_inverse(a, r);
  double best = (lri.z * a - Matrix::identity(6)).frobenius_norm();

  auto s = linalg::svd(a);
  Rng comp(17);
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix zc(6, 6);
    if (trial % 2 == 0) {
      // local factor perturbation of the optimum, rank still r
      double eps = std::pow(10.0, -1.0 - 3.0 * comp.next_uniform());
      Matrix vr(6, r), ur(6, r);
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < 6; ++i) {
          vr(i, j) = s.v(i, j) + eps * comp.next_gaussian();
          ur(i, j) = s.u(i, j) + eps * comp.next_gaussian();
        }
      Matrix mid(r, r);
      for (std::size_t j = 0; j < r; ++j)
        mid(j, j) = 1.0 / s.singular_values[j] + eps * comp.next_gaussian();
      zc = vr * mid * ur.transposed();
    } else {
      Matrix g1 = Matrix::gaussian(6, r, comp);
      Matrix g2 = Matrix::gaussian(r, 6, comp);
      zc = g1 * g2;
    }
    double got = (zc * a - Matrix::identity(6)).frobenius_norm();
    CHECK(got >= best - 1e-12);
  }
}

TEST_CASE("low_rank_inverse error cases") {
  Rng rng(4);
  Matrix g = Matrix::gaussian(5, 2, rng);
  Matrix a = g * g.transposed();  // rank 2
  CHECK_THROWS_AS(linalg::low_rank_inverse(a, 3), std::domain_error);
  CHECK_THROWS_AS(linalg::low_rank_inverse(a, 0), std::invalid_argument);
  auto ok = linalg::low_rank_inverse(a, 2);
  CHECK(ok.z.rows() == 5);
}

TEST_CASE("truncation_error closed forms") {
  SymmetricMatrix h = SymmetricMatrix::diagonal({3.0, 2.0, 1.0});
  auto t2 = linalg::truncation_error(h, 2);
  CHECK(t2.spectral == doctest::Approx(1.0));
  CHECK(t2.frobenius == doctest::Approx(1.0));
  auto t0 = linalg::truncation_error(h, 0);
  CHECK(t0.spectral == doctest::Approx(3.0));
  CHECK(t0.frobenius == doctest::Approx(std::sqrt(14.0)));
  auto t3 = linalg::truncation_error(h, 3);
  CHECK(t3.spectral == 0.0);
  CHECK(t3.frobenius == 0.0);
  CHECK_THROWS_AS(linalg::truncation_error(h, 4), std::out_of_range);
}

TEST_CASE("truncation_error is non-increasing in k") {
  SymmetricMatrix h = random_symmetric(8, 23);
  double prev_s = std::numeric_limits<double>::infinity();
  double prev_f = prev_s;
  for (std::size_t k = 0; k <= 8; ++k) {
    auto te = linalg::truncation_error(h, k);
    CHECK(te.spectral <= prev_s + 1e-15);
    CHECK(te.frobenius <= prev_f + 1e-15);
    prev_s = te.spectral;
    prev_f = te.frobenius;
  }
}

TEST_CASE("truncation_error matches the norm of the actual residual") {
  SymmetricMatrix h = random_symmetric(7, 29);
  auto e = linalg::sym_eig(h);
  for (std::size_t k : {1u, 3u, 5u}) {
    Matrix hk(7, 7);
    for (std::size_t j = 0; j < k; ++j) {
      Vec s = e.eigenvectors.column(j);
      for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t l = 0; l < 7; ++l)
          hk(i, l) += e.eigenvalues[j] * s[i] * s[l];
    }
    Matrix resid = h.matrix() - hk;
    auto np = linalg::norms(resid);
    auto te = linalg::truncation_error(h, k);
    CHECK(te.spectral == doctest::Approx(np.spectral).epsilon(1e-9));
    CHECK(te.frobenius == doctest::Approx(np.frobenius).epsilon(1e-9));
  }
}
