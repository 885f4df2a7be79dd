#pragma once
// Wishart sampling, Marchenko-Pastur density/CDF, and bulk/outlier
// classification of empirical spectra.

#include <cstdint>
#include <vector>

#include "tsfn/matrix.hpp"

namespace tsfn::rmt {

// Marchenko-Pastur law for W = n^-1 A A^T with A an m x n matrix of
// i.i.d. Normal(0, sigma^2) entries, aspect ratio c = m/n.
struct MPModel {
  double c;
  double sigma2;
  double c_minus;
  double c_plus;
  double point_mass_at_zero;

  MPModel(double c, double sigma2);
};

// Continuous part of the MP density; 0 outside the open support interval.
// The point mass at zero (c > 1) is reported by the model, not here.
double mp_density(double lambda, const MPModel& model);

// CDF including the point mass at zero. Adaptive Simpson quadrature with
// absolute error well under 1e-8; throws std::runtime_error if the
// refinement fails to converge.
double mp_cdf(double lambda, const MPModel& model);

// W = n^-1 A A^T, A seeded i.i.d. Normal(0, sigma^2); exact symmetry by
// construction.
SymmetricMatrix sample_wishart(std::size_t m, std::size_t n, double sigma,
                               std::uint64_t seed);

struct SpectrumPartition {
  std::size_t zeros = 0;            // |lambda| < zero_tol
  std::vector<double> bulk;         // inside [c_minus - pad, c_plus + pad]
  std::vector<double> outliers;     // above c_plus + pad
  std::vector<double> below_bulk;   // non-zero but under the bulk window
};

SpectrumPartition partition_spectrum(const std::vector<double>& eigs,
                                     const MPModel& model, double zero_tol,
                                     double edge_pad);

// Tracy-Widom-scale fluctuation width around the upper edge.
double default_edge_pad(const MPModel& model, std::size_t n);

// 1e-10 of the largest magnitude present.
double default_zero_tol(const std::vector<double>& eigs);

// Kolmogorov-Smirnov distance between the empirical distribution of eigs
// and the model CDF.
double ks_distance(std::vector<double> eigs, const MPModel& model);

// Inverse CDF by bisection; p must lie in [point_mass_at_zero, 1].
double mp_quantile(double p, const MPModel& model);

// Fit the bulk scale of an empirical spectrum: sigma2 is chosen so the p-th
// quantile of the nonzero eigenvalue magnitudes matches the MP quantile at
// p. A high p (default 0.95) keeps the fit robust against a small count of
// outliers above the bulk.
MPModel fit_bulk_scale(const std::vector<double>& eigs, double c,
                       double p = 0.95);

}  // namespace tsfn::rmt
