#include "tsfn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsfn::opt {

namespace {

void check_point(const obj::Objective& objective, const Vec& x,
                 const char* who) {
  if (x.size() != objective.dim())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

// x - S diag(1/f(lambda)) S^T grad, with f = identity (newton) or
// magnitude (sfn)
Vec spectral_step(const obj::Objective& objective, const Vec& x,
                  bool absolute, const char* who) {
  Vec g = objective.gradient(x);
  auto eig = linalg::sym_eig(objective.hessian(x));
  double scale = 0.0;
  for (double l : eig.eigenvalues) scale = std::max(scale, std::fabs(l));
  for (double l : eig.eigenvalues)
    if (std::fabs(l) < 1e-12 * scale || l == 0.0)
      throw std::domain_error(std::string(who) +
                              ": Hessian is numerically singular");

  Vec v = eig.eigenvectors.apply_transposed(g);
  for (std::size_t i = 0; i < v.size(); ++i) {
    double d = absolute ? std::fabs(eig.eigenvalues[i]) : eig.eigenvalues[i];
    v[i] /= d;
  }
  Vec step = eig.eigenvectors.apply(v);
  Vec out = x;
  vec_axpy(-1.0, step, out);
  return out;
}

void validate(const OptimizerConfig& config) {
  if (config.grad_tol <= 0.0)
    throw std::invalid_argument("run: grad_tol must be > 0");
  if (config.step_scale <= 0.0)
    throw std::invalid_argument("run: step_scale must be > 0");
  if (config.method == Method::gd && config.eta <= 0.0)
    throw std::invalid_argument("run: eta must be > 0");
  if (config.method == Method::tsfn) {
    if (config.top_k.has_value() == config.threshold.has_value())
      throw std::invalid_argument(
          "run: tsfn needs exactly one of top_k, threshold");
    if (config.top_k && *config.top_k == 0)
      throw std::invalid_argument("run: top_k must be >= 1");
    if (config.threshold && *config.threshold <= 0.0)
      throw std::invalid_argument("run: threshold must be > 0");
  }
}

}  // namespace

Vec gd_step(const obj::Objective& objective, const Vec& x, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("gd_step: eta must be > 0");
  check_point(objective, x, "gd_step");
  Vec g = objective.gradient(x);
  if (!vec_is_finite(g))
    throw std::runtime_error("gd_step: non-finite gradient");
  Vec out = x;
  vec_axpy(-eta, g, out);
  return out;
}

Vec newton_step(const obj::Objective& objective, const Vec& x) {
  check_point(objective, x, "newton_step");
  return spectral_step(objective, x, false, "newton_step");
}

Vec sfn_step(const obj::Objective& objective, const Vec& x) {
  check_point(objective, x, "sfn_step");
  return spectral_step(objective, x, true, "sfn_step");
}

std::pair<Vec, linalg::TruncatedSpectrum> tsfn_step(
    const obj::Objective& objective, const Vec& x, double threshold) {
  check_point(objective, x, "tsfn_step");
  auto [pinv, spectrum] =
      linalg::abs_pinv_truncated(objective.hessian(x), threshold);
  Vec step = pinv.apply(objective.gradient(x));
  Vec out = x;
  vec_axpy(-1.0, step, out);
  return {std::move(out), std::move(spectrum)};
}

std::pair<Vec, linalg::TruncatedSpectrum> tsfn_step_top_k(
    const obj::Objective& objective, const Vec& x, std::size_t k) {
  check_point(objective, x, "tsfn_step_top_k");
  if (k == 0 || k > objective.dim())
    throw std::out_of_range("tsfn_step_top_k: k outside [1, dim]");
  auto eig = linalg::sym_eig(objective.hessian(x));
  double cut = std::fabs(eig.eigenvalues[k - 1]);
  if (cut == 0.0)
    throw std::domain_error("tsfn_step_top_k: k-th eigenvalue is zero");
  return tsfn_step(objective, x, cut);
}

Trajectory run(const obj::Objective& objective, const OptimizerConfig& config,
               const Vec& x0) {
  validate(config);
  check_point(objective, x0, "run");

  Trajectory tr;
  Vec x = x0;
  double f = objective.value(x);
  Vec g = objective.gradient(x);
  if (!std::isfinite(f) || !vec_is_finite(g)) {
    tr.status = RunStatus::diverged;
    return tr;
  }
  tr.iterates.push_back(x);
  tr.values.push_back(f);
  tr.grad_norms.push_back(vec_norm(g));

  for (std::size_t t = 0;; ++t) {
    if (tr.grad_norms.back() <= config.grad_tol) {
      tr.status = RunStatus::converged;
      break;
    }
    if (t == config.max_iter) {
      tr.status = RunStatus::max_iterations;
      break;
    }

    Vec next;
    std::size_t k_used = 0;
    double kappa = 0.0;
    switch (config.method) {
      case Method::gd:
        next = gd_step(objective, x, config.eta);
        break;
      case Method::newton:
        next = newton_step(objective, x);
        break;
      case Method::sfn:
        next = sfn_step(objective, x);
        break;
      case Method::tsfn: {
        auto [xn, spectrum] =
            config.top_k ? tsfn_step_top_k(objective, x, *config.top_k)
                         : tsfn_step(objective, x, *config.threshold);
        next = std::move(xn);
        k_used = spectrum.k;
        kappa = spectrum.kappa_eff;
        break;
      }
    }
    if (config.step_scale != 1.0)
      for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = x[i] + config.step_scale * (next[i] - x[i]);

    if (!vec_is_finite(next)) {
      tr.status = RunStatus::diverged;
      break;
    }
    double fn = objective.value(next);
    Vec gn = objective.gradient(next);
    if (!std::isfinite(fn) || !vec_is_finite(gn)) {
      tr.status = RunStatus::diverged;
      break;
    }

    double step_norm = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      double d = next[i] - x[i];
      step_norm += d * d;
    }
    tr.step_norms.push_back(std::sqrt(step_norm));
    tr.k_used.push_back(k_used);
    tr.kappa_eff.push_back(kappa);
    x = std::move(next);
    f = fn;
    g = std::move(gn);
    tr.iterates.push_back(x);
    tr.values.push_back(f);
    tr.grad_norms.push_back(vec_norm(g));
  }
  return tr;
}

}  // namespace tsfn::opt
