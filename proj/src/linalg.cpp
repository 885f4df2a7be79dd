#include "tsfn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "tsfn/kernels.hpp"

namespace tsfn::linalg {
namespace {

constexpr int kSweepCap = 64;

// Householder reduction of symmetric A (row-major, overwritten) to
// tridiagonal form. qt accumulates the transform with eigenvectors as rows
// (Q^T), so the QL rotations later touch contiguous memory. On exit d holds
// the diagonal and e[1..n-1] the subdiagonal.
void tridiagonalize(std::vector<double>& a, std::vector<double>& qt,
                    std::size_t n, Vec& d, Vec& e) {
  std::fill(qt.begin(), qt.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) qt[i * n + i] = 1.0;

  std::vector<double> v(n), p(n), w(n), u(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double sigma2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) sigma2 += a[i * n + k] * a[i * n + k];
    double sigma = std::sqrt(sigma2);
    if (sigma == 0.0) continue;

    double akk1 = a[(k + 1) * n + k];
    double alpha = akk1 >= 0.0 ? -sigma : sigma;
    // Householder vector over indices k+1..n-1
    v[k + 1] = akk1 - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = a[i * n + k];
    double vnorm2 = v[k + 1] * v[k + 1] + (sigma2 - akk1 * akk1);
    if (vnorm2 <= 0.0) continue;
    double beta = 2.0 / vnorm2;

    // symmetric rank-2 update of the trailing block:
    // p = beta * A v, w = p - (beta/2)(v.p) v, A -= v w^T + w v^T
    for (std::size_t i = k + 1; i < n; ++i) {
      double s = 0.0;
      const double* arow = a.data() + i * n;
      for (std::size_t j = k + 1; j < n; ++j) s += arow[j] * v[j];
      p[i] = beta * s;
    }
    double vp = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vp += v[i] * p[i];
    double half = 0.5 * beta * vp;
    for (std::size_t i = k + 1; i < n; ++i) w[i] = p[i] - half * v[i];
    for (std::size_t i = k + 1; i < n; ++i) {
      double* arow = a.data() + i * n;
      double vi = v[i], wi = w[i];
      for (std::size_t j = k + 1; j < n; ++j)
        arow[j] -= vi * w[j] + wi * v[j];
    }

    a[(k + 1) * n + k] = alpha;
    a[k * n + k + 1] = alpha;
    for (std::size_t i = k + 2; i < n; ++i) {
      a[i * n + k] = 0.0;
      a[k * n + i] = 0.0;
    }

    // Q^T <- (I - beta v v^T) Q^T: u = sum_i v_i row_i, rows -= beta v_i u
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = k + 1; i < n; ++i)
      kern::axpy(v[i], qt.data() + i * n, u.data(), n);
    for (std::size_t i = k + 1; i < n; ++i)
      kern::axpy(-beta * v[i], u.data(), qt.data() + i * n, n);
  }

  for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
  e[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) e[i] = a[i * n + i - 1];
}

// Implicit-shift QL on the tridiagonal (d, e), rotations accumulated into
// the rows of qt. EISPACK tql2 recast to 0-based indices.
void ql_implicit(Vec& d, Vec& e, std::vector<double>& qt, std::size_t n) {
  if (n == 1) return;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::fabs(d[l]) + std::fabs(e[l]));
    std::size_t m = l;
    while (m < n && std::fabs(e[m]) > eps * tst1) ++m;
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kSweepCap)
          throw std::runtime_error(
              "sym_eig: QL iteration exceeded 64 sweeps without converging");
        double g = d[l];
        double pp = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(pp, 1.0);
        if (pp < 0.0) r = -r;
        d[l] = e[l] / (pp + r);
        d[l + 1] = e[l] * (pp + r);
        double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        pp = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t i1 = m; i1-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i1];
          h = c * pp;
          r = std::hypot(pp, e[i1]);
          e[i1 + 1] = s * r;
          s = e[i1] / r;
          c = pp / r;
          pp = c * d[i1] - s * g;
          d[i1 + 1] = h + s * (c * g + s * d[i1]);
          // combine eigenvector rows i1 and i1+1
          kern::rot(qt.data() + i1 * n, qt.data() + (i1 + 1) * n, c, -s, n);
        }
        pp = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * pp;
        d[l] = c * pp;
      } while (std::fabs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

// descending |value|, signed value descending as tie break
std::vector<std::size_t> abs_sort_order(const Vec& vals) {
  std::vector<std::size_t> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double fa = std::fabs(vals[a]), fb = std::fabs(vals[b]);
    if (fa != fb) return fa > fb;
    return vals[a] > vals[b];
  });
  return idx;
}

// flip each row of qt so its largest-magnitude entry is positive, for
// deterministic output across kernel variants
void canonicalize_rows(std::vector<double>& qt, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    double* row = qt.data() + r * n;
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (std::fabs(row[j]) > std::fabs(row[best])) best = j;
    if (row[best] < 0.0) kern::scal(-1.0, row, n);
  }
}

double rank_tolerance(const Matrix& a, double sigma_max) {
  return static_cast<double>(std::max(a.rows(), a.cols())) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

// Gram-Schmidt completion for zero singular directions so U keeps
// orthonormal columns even for rank-deficient input. cols is column-major.
void complete_column(std::vector<double>& cols, std::size_t m,
                     std::size_t ncols, std::size_t target) {
  for (std::size_t trial = 0; trial < m; ++trial) {
    std::vector<double> cand(m, 0.0);
    cand[trial] = 1.0;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (j == target) continue;
      const double* cj = cols.data() + j * m;
      double proj = kern::dot(cj, cand.data(), m);
      kern::axpy(-proj, cj, cand.data(), m);
    }
    double nrm = std::sqrt(kern::sumsq(cand.data(), m));
    if (nrm > 0.5) {  // candidate not (nearly) in the span already
      kern::scal(1.0 / nrm, cand.data(), m);
      std::memcpy(cols.data() + target * m, cand.data(), m * sizeof(double));
      return;
    }
  }
  throw std::runtime_error("svd: failed to complete orthonormal basis");
}

// One-sided Jacobi on column-major ucols (m x p); vcols (p x p) accumulates
// the right vectors. Requires m >= p.
void jacobi_onesided(std::vector<double>& ucols, std::vector<double>& vcols,
                     std::size_t m, std::size_t p) {
  std::fill(vcols.begin(), vcols.end(), 0.0);
  for (std::size_t j = 0; j < p; ++j) vcols[j * p + j] = 1.0;
  if (p < 2) return;

  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < kSweepCap; ++sweep) {
    bool rotated = false;
    for (std::size_t q = 1; q < p; ++q) {
      for (std::size_t pi = 0; pi < q; ++pi) {
        double* cp = ucols.data() + pi * m;
        double* cq = ucols.data() + q * m;
        double app = kern::sumsq(cp, m);
        double aqq = kern::sumsq(cq, m);
        double apq = kern::dot(cp, cq, m);
        // a column whose mass is below rounding level relative to its
        // partner cannot be resolved further, rotating it forever would
        // just chase its own rounding residue
        if (std::min(app, aqq) <= eps * eps * std::max(app, aqq)) continue;
        if (std::fabs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0)
          continue;
        rotated = true;
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        // col_p' = c col_p - s col_q, col_q' = s col_p + c col_q
        kern::rot(cp, cq, c, -s, m);
        kern::rot(vcols.data() + pi * p, vcols.data() + q * p, c, -s, p);
      }
    }
    if (!rotated) return;
  }
  throw std::runtime_error(
      "svd: Jacobi sweeps exceeded 64 without converging");
}

SvdDecomposition svd_tall(const Matrix& a) {
  std::size_t m = a.rows(), p = a.cols();
  std::vector<double> ucols(m * p), vcols(p * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < m; ++i) ucols[j * m + i] = a(i, j);

  jacobi_onesided(ucols, vcols, m, p);

  Vec sigma(p);
  for (std::size_t j = 0; j < p; ++j)
    sigma[j] = std::sqrt(kern::sumsq(ucols.data() + j * m, m));

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return sigma[x] > sigma[y];
                   });

  double smax = sigma.empty() ? 0.0 : sigma[order[0]];
  double tol = rank_tolerance(a, smax);

  std::vector<double> unorm(m * p), vperm(p * p);
  Vec svals(p);
  std::size_t rank = 0;
  for (std::size_t jj = 0; jj < p; ++jj) {
    std::size_t src = order[jj];
    svals[jj] = sigma[src];
    std::memcpy(vperm.data() + jj * p, vcols.data() + src * p,
                p * sizeof(double));
    double* dst = unorm.data() + jj * m;
    std::memcpy(dst, ucols.data() + src * m, m * sizeof(double));
    if (sigma[src] > tol) {
      kern::scal(1.0 / sigma[src], dst, m);
      ++rank;
    } else {
      std::memset(dst, 0, m * sizeof(double));
    }
  }
  for (std::size_t jj = rank; jj < p; ++jj)
    complete_column(unorm, m, p, jj);

  SvdDecomposition out;
  out.u = Matrix(m, p);
  out.v = Matrix(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < m; ++i) out.u(i, j) = unorm[j * m + i];
    for (std::size_t i = 0; i < p; ++i) out.v(i, j) = vperm[j * p + i];
  }
  out.singular_values = std::move(svals);
  out.rank = rank;
  return out;
}

}  // namespace

EigenDecomposition sym_eig(const SymmetricMatrix& h) {
  if (!h.matrix().is_finite())
    throw std::invalid_argument("sym_eig: non-finite entries");
  std::size_t n = h.dim();

  std::vector<double> a(h.matrix().data(), h.matrix().data() + n * n);
  std::vector<double> qt(n * n);
  Vec d(n), e(n, 0.0);
  tridiagonalize(a, qt, n, d, e);
  ql_implicit(d, e, qt, n);
  canonicalize_rows(qt, n);

  auto order = abs_sort_order(d);
  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = d[order[j]];
    const double* row = qt.data() + order[j] * n;
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = row[i];
  }
  return out;
}

SvdDecomposition svd(const Matrix& a) {
  if (a.empty()) throw std::invalid_argument("svd: empty matrix");
  if (!a.is_finite()) throw std::invalid_argument("svd: non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdDecomposition t = svd_tall(a.transposed());
  std::swap(t.u, t.v);
  return t;
}

NormPair norms(const Matrix& a) {
  if (!a.is_finite()) throw std::invalid_argument("norms: non-finite entries");
  NormPair np;
  np.frobenius = a.frobenius_norm();
  if (np.frobenius == 0.0) {
    np.spectral = 0.0;
    return np;
  }
  SvdDecomposition s = svd(a);
  np.spectral = s.singular_values.empty() ? 0.0 : s.singular_values[0];
  return np;
}

std::pair<Matrix, TruncatedSpectrum> abs_pinv_truncated(
    const SymmetricMatrix& h, double threshold) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("abs_pinv_truncated: threshold must be > 0");
  EigenDecomposition eig = sym_eig(h);
  std::size_t n = h.dim();

  std::size_t k = 0;
  while (k < n && std::fabs(eig.eigenvalues[k]) >= threshold) ++k;
  if (k == 0)
    throw std::domain_error(
        "abs_pinv_truncated: no eigenvalue magnitude reaches threshold");

  TruncatedSpectrum ts;
  ts.k = k;
  ts.threshold = threshold;
  ts.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + k);
  ts.eigenvectors = Matrix(n, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      ts.eigenvectors(i, j) = eig.eigenvectors(i, j);
  ts.kappa_eff = std::fabs(eig.eigenvalues[0]) / threshold;

  // B = S_k diag(|lambda|^-1/2); pinv = B B^T
  Matrix b(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    double w = 1.0 / std::sqrt(std::fabs(ts.eigenvalues[j]));
    for (std::size_t i = 0; i < n; ++i) b(i, j) = w * ts.eigenvectors(i, j);
  }
  Matrix pinv = b * b.transposed();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (pinv(i, j) + pinv(j, i));
      pinv(i, j) = v;
      pinv(j, i) = v;
    }
  return {std::move(pinv), std::move(ts)};
}

LowRankInverse low_rank_inverse(const Matrix& a, std::size_t r) {
  if (r == 0) throw std::invalid_argument("low_rank_inverse: r must be >= 1");
  SvdDecomposition s = svd(a);
  if (r > s.rank)
    throw std::domain_error("low_rank_inverse: r exceeds numerical rank");

  double smax = s.singular_values[0];
  bool unique = true;
  if (r < s.singular_values.size()) {
    double gap = s.singular_values[r - 1] - s.singular_values[r];
    if (gap <= 1e-10 * smax) unique = false;
  }

  // Z = V_r diag(1/sigma) U_r^T
  std::size_t nrows = s.v.rows(), ncols = s.u.rows();
  Matrix vr(nrows, r), urt(r, ncols);
  for (std::size_t j = 0; j < r; ++j) {
    double inv = 1.0 / s.singular_values[j];
    for (std::size_t i = 0; i < nrows; ++i) vr(i, j) = s.v(i, j) * inv;
    for (std::size_t i = 0; i < ncols; ++i) urt(j, i) = s.u(i, j);
  }
  return {vr * urt, unique};
}

TruncationError truncation_error(const SymmetricMatrix& h, std::size_t k) {
  std::size_t n = h.dim();
  if (k > n)
    throw std::out_of_range("truncation_error: k exceeds dimension");
  EigenDecomposition eig = sym_eig(h);
  TruncationError te{0.0, 0.0};
  if (k == n) return te;
  te.spectral = std::fabs(eig.eigenvalues[k]);
  double ss = 0.0;
  for (std::size_t i = k; i < n; ++i)
    ss += eig.eigenvalues[i] * eig.eigenvalues[i];
  te.frobenius = std::sqrt(ss);
  return te;
}

}  // namespace tsfn::linalg
