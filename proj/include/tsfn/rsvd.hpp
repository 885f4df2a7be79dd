#pragma once
// Sampling-based approximate SVD with empirical verification of the
// Frobenius and spectral error bounds.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsfn/matrix.hpp"

namespace tsfn::rsvd {

struct RsvdConfig {
  std::size_t c = 0;      // sampled column count
  std::size_t k = 0;      // target rank
  double beta = 1.0;      // sampling-probability floor coefficient
  double delta = 0.1;     // failure probability for the high-prob bounds
  std::uint64_t seed = 0;
};

// 1 + sqrt((8/beta) log(1/delta))
double eta_coefficient(double beta, double delta);

// Samples c columns of a with replacement with probabilities
// p_i = beta |a^i|^2 / ||a||_F^2 + (1-beta)/n, rescales sample j by
// 1/sqrt(c p_j), and returns the top-k left singular vectors of the
// sampled m x c matrix as an orthonormal m x k matrix.
Matrix linear_time_svd(const Matrix& a, const RsvdConfig& config);

// One bound variant checked over the trials. epsilon is the smallest value
// the theorem grants for the configured c, rhs the resulting right side.
struct BoundCheck {
  double epsilon = 0.0;
  double rhs = 0.0;
  double mean_err_sq = 0.0;
  double std_error = 0.0;       // standard error of the mean
  double pass_rate = 0.0;       // fraction of trials with err_sq <= rhs
  bool mean_within_2se = false; // mean_err_sq <= rhs + 2 std_error
};

struct TrialResult {
  std::size_t trial = 0;
  double fro_err_sq = 0.0;
  double spec_err_sq = 0.0;
};

struct RsvdReport {
  std::size_t trials = 0;
  double a_fro_sq = 0.0;     // ||a||_F^2
  double opt_fro_sq = 0.0;   // ||a - a_k||_F^2 from the exact svd
  double opt_spec_sq = 0.0;  // ||a - a_k||_2^2
  double eta = 0.0;
  BoundCheck fro_expectation;
  BoundCheck fro_high_probability;
  BoundCheck spec_expectation;
  BoundCheck spec_high_probability;
  std::vector<TrialResult> detail;
};

// Runs linear_time_svd over seeded trials and checks the four bound
// variants (Frobenius and spectral, expectation and high probability)
// against the exact rank-k optimum.
RsvdReport verify_bounds(const Matrix& a, const RsvdConfig& config,
                         std::size_t trials);

}  // namespace tsfn::rsvd
