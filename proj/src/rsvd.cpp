#include "tsfn/rsvd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsfn/kernels.hpp"
#include "tsfn/linalg.hpp"
#include "tsfn/rng.hpp"

namespace tsfn::rsvd {

namespace {

void validate(const Matrix& a, const RsvdConfig& config) {
  if (a.empty()) throw std::invalid_argument("rsvd: empty matrix");
  if (!a.is_finite()) throw std::invalid_argument("rsvd: non-finite entries");
  if (config.k == 0) throw std::invalid_argument("rsvd: k must be >= 1");
  if (config.c < config.k)
    throw std::invalid_argument("rsvd: need c >= k sampled columns");
  if (config.c > a.cols())
    throw std::invalid_argument("rsvd: c exceeds the column count");
  if (!(config.beta > 0.0) || config.beta > 1.0)
    throw std::invalid_argument("rsvd: beta outside (0, 1]");
}

std::vector<double> sampling_probabilities(const Matrix& a, double beta) {
  std::size_t n = a.cols();
  std::vector<double> p(n, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double w = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) w += a(i, j) * a(i, j);
    p[j] = w;
    total += w;
  }
  if (total <= 0.0)
    throw std::domain_error("rsvd: zero matrix has no sampling distribution");
  double uniform = (1.0 - beta) / static_cast<double>(n);
  for (auto& x : p) x = beta * x / total + uniform;
  return p;
}

// spectral norm squared of r = (I - hh^T) a, power iteration on r^T r.
// With unit v the Rayleigh quotient v^T r^T r v is just |r v|^2, and the
// idempotent projector collapses r^T r v to a^T (r v).
double residual_spectral_sq(const Matrix& a, const Matrix& h,
                            std::uint64_t seed) {
  std::size_t n = a.cols();
  Rng rng(seed);
  Vec v = rng.gaussian_vector(n);
  double vn = vec_norm(v);
  if (vn == 0.0) return 0.0;
  for (auto& x : v) x /= vn;
  double lam = 0.0;
  for (std::size_t it = 0; it < 300; ++it) {
    Vec rv = a.apply(v);
    Vec proj = h.apply(h.apply_transposed(rv));
    for (std::size_t i = 0; i < rv.size(); ++i) rv[i] -= proj[i];
    lam = vec_dot(rv, rv);
    Vec next = a.apply_transposed(rv);
    double nn = vec_norm(next);
    if (nn == 0.0) return lam;
    for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / nn;
  }
  return lam;
}

BoundCheck check_bound(const std::vector<double>& errs, double epsilon,
                       double opt_sq, double a_fro_sq) {
  BoundCheck out;
  out.epsilon = epsilon;
  out.rhs = opt_sq + epsilon * a_fro_sq;
  std::size_t t = errs.size();
  double mean = 0.0;
  std::size_t pass = 0;
  for (double e : errs) {
    mean += e;
    if (e <= out.rhs) ++pass;
  }
  mean /= static_cast<double>(t);
  double var = 0.0;
  for (double e : errs) var += (e - mean) * (e - mean);
  var /= static_cast<double>(t - 1);
  out.mean_err_sq = mean;
  out.std_error = std::sqrt(var / static_cast<double>(t));
  out.pass_rate = static_cast<double>(pass) / static_cast<double>(t);
  out.mean_within_2se = mean <= out.rhs + 2.0 * out.std_error;
  return out;
}

}  // namespace

double eta_coefficient(double beta, double delta) {
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("eta_coefficient: beta outside (0, 1]");
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("eta_coefficient: delta outside (0, 1)");
  return 1.0 + std::sqrt(8.0 / beta * std::log(1.0 / delta));
}

Matrix linear_time_svd(const Matrix& a, const RsvdConfig& config) {
  validate(a, config);
  std::vector<double> p = sampling_probabilities(a, config.beta);

  std::size_t n = a.cols(), m = a.rows();
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += p[j];
    cumulative[j] = acc;
  }

  Rng rng(config.seed);
  Matrix sampled(m, config.c);
  for (std::size_t t = 0; t < config.c; ++t) {
    double u = rng.next_uniform() * acc;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    auto j = static_cast<std::size_t>(it - cumulative.begin());
    double scale = 1.0 / std::sqrt(static_cast<double>(config.c) * p[j]);
    for (std::size_t i = 0; i < m; ++i) sampled(i, t) = a(i, j) * scale;
  }

  auto dec = linalg::svd(sampled);
  Matrix h(m, config.k);
  for (std::size_t j = 0; j < config.k; ++j)
    for (std::size_t i = 0; i < m; ++i) h(i, j) = dec.u(i, j);
  return h;
}

RsvdReport verify_bounds(const Matrix& a, const RsvdConfig& config,
                         std::size_t trials) {
  validate(a, config);
  if (trials < 30)
    throw std::invalid_argument("verify_bounds: need at least 30 trials");

  RsvdReport report;
  report.trials = trials;
  report.eta = eta_coefficient(config.beta, config.delta);

  auto exact = linalg::svd(a);
  for (double s : exact.singular_values) report.a_fro_sq += s * s;
  for (std::size_t i = config.k; i < exact.singular_values.size(); ++i)
    report.opt_fro_sq += exact.singular_values[i] * exact.singular_values[i];
  report.opt_spec_sq = config.k < exact.singular_values.size()
                           ? exact.singular_values[config.k] *
                                 exact.singular_values[config.k]
                           : 0.0;

  std::vector<double> fro_errs, spec_errs;
  for (std::size_t t = 0; t < trials; ++t) {
    RsvdConfig trial_cfg = config;
    trial_cfg.seed = config.seed + t;
    Matrix h = linear_time_svd(a, trial_cfg);
    // ||a - hh^T a||_F^2 = ||a||_F^2 - ||h^T a||_F^2 for a projector
    Matrix hta = h.transposed() * a;
    double captured = kern::sumsq(hta.data(), hta.rows() * hta.cols());
    double fro_err = std::max(0.0, report.a_fro_sq - captured);
    double spec_err = residual_spectral_sq(a, h, trial_cfg.seed + 77);
    fro_errs.push_back(fro_err);
    spec_errs.push_back(spec_err);
    report.detail.push_back({t, fro_err, spec_err});
  }

  double k = static_cast<double>(config.k);
  double c = static_cast<double>(config.c);
  double eta_sq = report.eta * report.eta;
  report.fro_expectation = check_bound(
      fro_errs, std::sqrt(4.0 * k / (config.beta * c)), report.opt_fro_sq,
      report.a_fro_sq);
  report.fro_high_probability = check_bound(
      fro_errs, std::sqrt(4.0 * k * eta_sq / (config.beta * c)),
      report.opt_fro_sq, report.a_fro_sq);
  report.spec_expectation = check_bound(
      spec_errs, std::sqrt(4.0 / (config.beta * c)), report.opt_spec_sq,
      report.a_fro_sq);
  report.spec_high_probability = check_bound(
      spec_errs, std::sqrt(4.0 * eta_sq / (config.beta * c)),
      report.opt_spec_sq, report.a_fro_sq);
  return report;
}

}  // namespace tsfn::rsvd
