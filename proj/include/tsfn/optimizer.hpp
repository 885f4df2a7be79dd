#pragma once
// Iterative optimizers: gradient descent, exact Newton, saddle-free Newton,
// and the truncated saddle-free Newton step, with trajectory recording.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tsfn/linalg.hpp"
#include "tsfn/objectives.hpp"

namespace tsfn::opt {

enum class Method { gd, newton, sfn, tsfn };

enum class RunStatus { converged, max_iterations, diverged };

struct OptimizerConfig {
  Method method = Method::gd;
  double eta = 1e-3;  // gd step size
  // tsfn truncation control, exactly one must be set
  std::optional<std::size_t> top_k;    // keep the k largest |lambda|
  std::optional<double> threshold;     // keep |lambda| >= threshold
  std::size_t max_iter = 1000;
  double grad_tol = 1e-8;
  double step_scale = 1.0;  // multiplies every step, divergence mitigation
  std::uint64_t seed = 0;   // recorded for reproducibility, unused by run
};

// Iterates x^0..x^T with values and gradient norms, one entry per recorded
// point. The per-step arrays have one entry per step taken; k_used and
// kappa_eff are zero for methods that do not truncate. A step that produces
// a non-finite point or value is not recorded; status reports diverged.
struct Trajectory {
  std::vector<Vec> iterates;
  std::vector<double> values;
  std::vector<double> grad_norms;
  std::vector<std::size_t> k_used;
  std::vector<double> kappa_eff;
  std::vector<double> step_norms;
  RunStatus status = RunStatus::max_iterations;

  std::size_t steps() const { return step_norms.size(); }
};

// x - eta grad f(x). Throws std::invalid_argument for eta <= 0,
// std::runtime_error on a non-finite gradient.
Vec gd_step(const obj::Objective& objective, const Vec& x, double eta);

// x - H^-1 grad f(x) via full eigendecomposition. Throws std::domain_error
// when some |lambda| < 1e-12 max|lambda| (numerically singular Hessian).
Vec newton_step(const obj::Objective& objective, const Vec& x);

// x - |H|^-1 grad f(x) where |H|^-1 = sum |lambda_i|^-1 s_i s_i^T.
// Same singularity contract as newton_step.
Vec sfn_step(const obj::Objective& objective, const Vec& x);

// x - |H_k|^-1 grad f(x), keeping |lambda| >= threshold. Gradient mass in
// the discarded subspace produces zero step. Error contract follows
// linalg::abs_pinv_truncated.
std::pair<Vec, linalg::TruncatedSpectrum> tsfn_step(
    const obj::Objective& objective, const Vec& x, double threshold);

// Top-k form: k is converted to threshold = |lambda_k| so truncation is a
// single mechanism. Throws std::out_of_range for k outside [1, dim],
// std::domain_error when |lambda_k| is zero.
std::pair<Vec, linalg::TruncatedSpectrum> tsfn_step_top_k(
    const obj::Objective& objective, const Vec& x, std::size_t k);

// Iterates until ||grad f|| <= grad_tol or max_iter steps. Divergence is
// recorded in the trajectory status, not thrown; singular-Hessian errors
// from the step operations propagate.
Trajectory run(const obj::Objective& objective, const OptimizerConfig& config,
               const Vec& x0);

}  // namespace tsfn::opt
