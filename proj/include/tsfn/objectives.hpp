#pragma once
// Differentiable test objectives: chained Rosenbrock, quadratics in Morse
// normal form, and a small tanh MLP with mean squared error loss. Each
// exposes value, exact gradient, and a symmetric Hessian.

#include <cstdint>
#include <memory>
#include <vector>

#include "tsfn/matrix.hpp"

namespace tsfn::obj {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual SymmetricMatrix hessian(const Vec& x) const = 0;
};

// f = sum_{i<n-1} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2, analytic
// derivatives. Requires n >= 2.
std::unique_ptr<Objective> rosenbrock(std::size_t n);

// f(x) = 1/2 sum_i lambda_i v_i^2 with v = basis^T (x - x_star), evaluated
// literally in eigencoordinates so the Morse identity is exact. The basis
// must be orthogonal.
std::unique_ptr<Objective> morse_quadratic(Vec lambdas, Matrix basis,
                                           Vec x_star);

struct Dataset {
  Matrix inputs;   // n_samples x dim
  Matrix targets;  // n_samples x out_dim
};

// Gaussian inputs x = z + spike_strength * sum_j g_j w_j with orthonormal
// seeded directions w_j, so the population covariance is
// I + spike_strength^2 * sum_j w_j w_j^T. Targets are a noisy linear
// teacher y = u.x / sqrt(dim) + 0.1 eps.
Dataset synthetic_correlated_data(std::size_t n_samples, std::size_t dim,
                                  std::size_t planted_rank,
                                  double spike_strength, std::uint64_t seed);

class MlpObjective : public Objective {
 public:
  // widths is the full layer chain [in, hidden..., out]; hidden activations
  // are tanh, the output layer is linear. Parameter count is capped at 4096.
  MlpObjective(std::vector<std::size_t> widths, Dataset data,
               std::uint64_t seed);

  std::size_t dim() const override { return n_params_; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  // central finite differences of the exact gradient, then symmetrized
  SymmetricMatrix hessian(const Vec& x) const override;

  // seeded small Gaussian draw, scaled by 1/sqrt(fan_in) per layer
  Vec initial_parameters() const;

  const Dataset& dataset() const { return data_; }
  const std::vector<std::size_t>& widths() const { return widths_; }

 private:
  std::vector<std::size_t> widths_;
  Dataset data_;
  std::uint64_t seed_;
  std::size_t n_params_;
};

std::unique_ptr<MlpObjective> mlp_objective(std::vector<std::size_t> widths,
                                            Dataset data, std::uint64_t seed);

}  // namespace tsfn::obj
