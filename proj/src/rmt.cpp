#include "tsfn/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsfn/kernels.hpp"
#include "tsfn/rng.hpp"

namespace tsfn::rmt {
namespace {

// Integrand of the CDF after the substitution lambda = mid + half*sin(t),
// which removes the square-root singularities at both edges:
//   rho(lambda) dlambda = half^2 cos^2(t) / (2 pi sigma2 c lambda(t)) dt.
// When c_minus == 0 the 0/0 at t = -pi/2 cancels algebraically to
//   half (1 - sin t) / (2 pi sigma2 c).
struct CdfIntegrand {
  double mid, half, norm;  // norm = 1 / (2 pi sigma2 c)
  bool lower_edge_zero;

  explicit CdfIntegrand(const MPModel& m)
      : mid(0.5 * (m.c_plus + m.c_minus)),
        half(0.5 * (m.c_plus - m.c_minus)),
        norm(1.0 / (2.0 * M_PI * m.sigma2 * m.c)),
        lower_edge_zero(m.c_minus <= 0.0) {}

  double operator()(double t) const {
    double st = std::sin(t);
    if (lower_edge_zero) return half * (1.0 - st) * norm;
    double ct = std::cos(t);
    return half * half * ct * ct * norm / (mid + half * st);
  }
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const CdfIntegrand& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol,
                     int depth) {
  if (depth > 60)
    throw std::runtime_error("mp_cdf: adaptive quadrature failed to converge");
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, m, fa, flm, fm);
  double right = simpson(m, b, fm, frm, fb);
  double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double integrate(const CdfIntegrand& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = simpson(a, b, fa, fm, fb);
  return adaptive_step(f, a, b, fa, fm, fb, whole, tol, 0);
}

}  // namespace

MPModel::MPModel(double c_in, double sigma2_in) : c(c_in), sigma2(sigma2_in) {
  if (!(c > 0.0)) throw std::invalid_argument("MPModel: c must be > 0");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("MPModel: sigma2 must be > 0");
  double sq = std::sqrt(c);
  c_minus = sigma2 * (1.0 - sq) * (1.0 - sq);
  c_plus = sigma2 * (1.0 + sq) * (1.0 + sq);
  point_mass_at_zero = std::max(0.0, 1.0 - 1.0 / c);
}

double mp_density(double lambda, const MPModel& model) {
  if (lambda <= model.c_minus || lambda >= model.c_plus) return 0.0;
  double num = (model.c_plus - lambda) * (lambda - model.c_minus);
  return std::sqrt(num) / (2.0 * M_PI * model.sigma2 * model.c * lambda);
}

double mp_cdf(double lambda, const MPModel& model) {
  if (lambda < 0.0) return 0.0;
  if (lambda <= model.c_minus) return model.point_mass_at_zero;
  if (lambda >= model.c_plus) return 1.0;

  CdfIntegrand f(model);
  double arg = (lambda - f.mid) / f.half;
  arg = std::clamp(arg, -1.0, 1.0);
  double t = std::asin(arg);
  double mass = integrate(f, -0.5 * M_PI, t, 1e-10);
  return std::min(1.0, model.point_mass_at_zero + mass);
}

SymmetricMatrix sample_wishart(std::size_t m, std::size_t n, double sigma,
                               std::uint64_t seed) {
  if (m == 0 || n == 0)
    throw std::invalid_argument("sample_wishart: m, n must be >= 1");
  Rng rng(seed);
  Matrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = sigma * rng.next_gaussian();

  Matrix w(m, m);
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double v = inv_n * kern::dot(a.row(i), a.row(j), n);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return SymmetricMatrix(std::move(w));
}

SpectrumPartition partition_spectrum(const std::vector<double>& eigs,
                                     const MPModel& model, double zero_tol,
                                     double edge_pad) {
  SpectrumPartition part;
  double lo = model.c_minus - edge_pad;
  double hi = model.c_plus + edge_pad;
  for (double l : eigs) {
    if (!std::isfinite(l))
      throw std::invalid_argument("partition_spectrum: non-finite eigenvalue");
    if (std::fabs(l) < zero_tol) {
      ++part.zeros;
    } else if (l > hi) {
      part.outliers.push_back(l);
    } else if (l >= lo) {
      part.bulk.push_back(l);
    } else {
      part.below_bulk.push_back(l);
    }
  }
  std::sort(part.outliers.begin(), part.outliers.end(), std::greater<>());
  std::sort(part.bulk.begin(), part.bulk.end(), std::greater<>());
  std::sort(part.below_bulk.begin(), part.below_bulk.end(), std::greater<>());
  return part;
}

double default_edge_pad(const MPModel& model, std::size_t n) {
  if (n == 0) throw std::invalid_argument("default_edge_pad: n must be >= 1");
  return 2.0 * std::pow(static_cast<double>(n), -2.0 / 3.0) * model.c_plus;
}

double default_zero_tol(const std::vector<double>& eigs) {
  double mx = 0.0;
  for (double l : eigs) mx = std::max(mx, std::fabs(l));
  return 1e-10 * mx;
}

double ks_distance(std::vector<double> eigs, const MPModel& model) {
  if (eigs.empty())
    throw std::invalid_argument("ks_distance: empty eigenvalue list");
  std::sort(eigs.begin(), eigs.end());
  double n = static_cast<double>(eigs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    double fx = mp_cdf(eigs[i], model);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::fabs(fx - lo), std::fabs(fx - hi)));
  }
  return d;
}

double mp_quantile(double p, const MPModel& model) {
  if (p < model.point_mass_at_zero || p > 1.0)
    throw std::invalid_argument("mp_quantile: p outside attainable range");
  if (p <= model.point_mass_at_zero) return 0.0;
  double lo = model.c_minus, hi = model.c_plus;
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * model.c_plus; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mp_cdf(mid, model) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MPModel fit_bulk_scale(const std::vector<double>& eigs, double c, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("fit_bulk_scale: p must be in (0, 1)");
  double zero_tol = default_zero_tol(eigs);
  std::vector<double> mags;
  mags.reserve(eigs.size());
  for (double l : eigs)
    if (std::fabs(l) > zero_tol) mags.push_back(std::fabs(l));
  if (mags.empty())
    throw std::domain_error("fit_bulk_scale: all eigenvalues are zero");
  std::sort(mags.begin(), mags.end());
  double q = mags[static_cast<std::size_t>(
      p * static_cast<double>(mags.size() - 1))];
  MPModel unit(c, 1.0);
  // zeros are excluded from mags, so reference the quantile of the
  // continuous part of the law
  double pm = unit.point_mass_at_zero;
  double ref = mp_quantile(pm + p * (1.0 - pm), unit);
  if (ref <= 0.0)
    throw std::domain_error("fit_bulk_scale: degenerate reference quantile");
  return MPModel(c, q / ref);
}

}  // namespace tsfn::rmt
