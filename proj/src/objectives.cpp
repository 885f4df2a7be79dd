#include "tsfn/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "tsfn/kernels.hpp"
#include "tsfn/rng.hpp"

namespace tsfn::obj {
namespace {

class Rosenbrock final : public Objective {
 public:
  explicit Rosenbrock(std::size_t n) : n_(n) {
    if (n < 2) throw std::invalid_argument("rosenbrock: n must be >= 2");
  }

  std::size_t dim() const override { return n_; }

  double value(const Vec& x) const override {
    check(x);
    double f = 0.0;
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      double t = x[i + 1] - x[i] * x[i];
      double u = 1.0 - x[i];
      f += 100.0 * t * t + u * u;
    }
    return f;
  }

  Vec gradient(const Vec& x) const override {
    check(x);
    Vec g(n_, 0.0);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      double t = x[i + 1] - x[i] * x[i];
      g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
      g[i + 1] += 200.0 * t;
    }
    return g;
  }

  SymmetricMatrix hessian(const Vec& x) const override {
    check(x);
    Matrix h(n_, n_);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      h(i, i) += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      h(i + 1, i + 1) += 200.0;
      double off = -400.0 * x[i];
      h(i, i + 1) = off;
      h(i + 1, i) = off;
    }
    return SymmetricMatrix(std::move(h));
  }

 private:
  void check(const Vec& x) const {
    if (x.size() != n_) throw std::invalid_argument("rosenbrock: wrong dim");
  }
  std::size_t n_;
};

class MorseQuadratic final : public Objective {
 public:
  MorseQuadratic(Vec lambdas, Matrix basis, Vec x_star)
      : lambdas_(std::move(lambdas)),
        basis_(std::move(basis)),
        x_star_(std::move(x_star)) {
    std::size_t n = lambdas_.size();
    if (basis_.rows() != n || basis_.cols() != n || x_star_.size() != n)
      throw std::invalid_argument("morse_quadratic: shape mismatch");
    Matrix g = basis_.transposed() * basis_;
    if ((g - Matrix::identity(n)).max_abs() > 1e-8)
      throw std::invalid_argument("morse_quadratic: basis not orthogonal");
  }

  std::size_t dim() const override { return lambdas_.size(); }

  double value(const Vec& x) const override {
    Vec v = eigencoords(x);
    double f = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      f += 0.5 * lambdas_[i] * v[i] * v[i];
    return f;
  }

  Vec gradient(const Vec& x) const override {
    Vec v = eigencoords(x);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= lambdas_[i];
    return basis_.apply(v);
  }

  SymmetricMatrix hessian(const Vec& x) const override {
    if (x.size() != lambdas_.size())
      throw std::invalid_argument("morse_quadratic: wrong dim");
    Matrix scaled = basis_;
    std::size_t n = lambdas_.size();
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= lambdas_[j];
    return SymmetricMatrix::from_symmetrized(scaled * basis_.transposed());
  }

 private:
  Vec eigencoords(const Vec& x) const {
    if (x.size() != lambdas_.size())
      throw std::invalid_argument("morse_quadratic: wrong dim");
    return basis_.apply_transposed(vec_sub(x, x_star_));
  }

  Vec lambdas_;
  Matrix basis_;
  Vec x_star_;
};

// forward pass over all samples at once; activations returned per layer
std::vector<Matrix> forward(const std::vector<std::size_t>& widths,
                            const Matrix& inputs,
                            const std::vector<Matrix>& w,
                            const std::vector<Vec>& b) {
  std::size_t layers = widths.size() - 1;
  std::vector<Matrix> act;
  act.reserve(layers + 1);
  act.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = act[l] * w[l].transposed();
    std::size_t n = z.rows(), m = z.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) z(i, j) += b[l][j];
    if (l + 1 < layers) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) z(i, j) = std::tanh(z(i, j));
    }
    act.push_back(std::move(z));
  }
  return act;
}

}  // namespace

std::unique_ptr<Objective> rosenbrock(std::size_t n) {
  return std::make_unique<Rosenbrock>(n);
}

std::unique_ptr<Objective> morse_quadratic(Vec lambdas, Matrix basis,
                                           Vec x_star) {
  return std::make_unique<MorseQuadratic>(std::move(lambdas), std::move(basis),
                                          std::move(x_star));
}

Dataset synthetic_correlated_data(std::size_t n_samples, std::size_t dim,
                                  std::size_t planted_rank,
                                  double spike_strength, std::uint64_t seed) {
  if (dim == 0 || n_samples == 0)
    throw std::invalid_argument("synthetic_correlated_data: empty shape");
  if (planted_rank > dim)
    throw std::invalid_argument(
        "synthetic_correlated_data: planted_rank exceeds dim");

  Rng rng(seed);
  std::vector<Vec> w;
  for (std::size_t j = 0; j < planted_rank; ++j) {
    Vec v = rng.gaussian_vector(dim);
    for (const auto& prev : w) vec_axpy(-vec_dot(prev, v), prev, v);
    double nrm = vec_norm(v);
    if (nrm == 0.0)
      throw std::runtime_error("synthetic_correlated_data: degenerate draw");
    vec_scale(1.0 / nrm, v);
    w.push_back(std::move(v));
  }

  Vec teacher = rng.gaussian_vector(dim);
  vec_scale(1.0 / vec_norm(teacher), teacher);

  Dataset ds;
  ds.inputs = Matrix(n_samples, dim);
  ds.targets = Matrix(n_samples, 1);
  double tscale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t t = 0; t < n_samples; ++t) {
    Vec x = rng.gaussian_vector(dim);
    for (const auto& wj : w)
      vec_axpy(spike_strength * rng.next_gaussian(), wj, x);
    for (std::size_t j = 0; j < dim; ++j) ds.inputs(t, j) = x[j];
    ds.targets(t, 0) =
        tscale * vec_dot(teacher, x) + 0.1 * rng.next_gaussian();
  }
  return ds;
}

MlpObjective::MlpObjective(std::vector<std::size_t> widths, Dataset data,
                           std::uint64_t seed)
    : widths_(std::move(widths)), data_(std::move(data)), seed_(seed) {
  if (widths_.size() < 2)
    throw std::invalid_argument("mlp_objective: need at least two widths");
  for (std::size_t wdt : widths_)
    if (wdt == 0) throw std::invalid_argument("mlp_objective: zero width");
  if (data_.inputs.rows() == 0)
    throw std::invalid_argument("mlp_objective: empty dataset");
  if (data_.inputs.cols() != widths_.front())
    throw std::invalid_argument("mlp_objective: input dim != first width");
  if (data_.targets.cols() != widths_.back())
    throw std::invalid_argument("mlp_objective: target dim != last width");
  if (data_.targets.rows() != data_.inputs.rows())
    throw std::invalid_argument("mlp_objective: inputs/targets row mismatch");

  n_params_ = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l)
    n_params_ += widths_[l + 1] * (widths_[l] + 1);
  if (n_params_ > 4096)
    throw std::length_error("mlp_objective: parameter count exceeds 4096");
}

namespace {

// unpack the flat parameter vector into per-layer weights and biases
void unpack(const std::vector<std::size_t>& widths, const Vec& x,
            std::vector<Matrix>& w, std::vector<Vec>& b) {
  std::size_t layers = widths.size() - 1;
  w.assign(layers, Matrix());
  b.assign(layers, Vec());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t rows = widths[l + 1], cols = widths[l];
    w[l] = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) w[l](i, j) = x[pos++];
    b[l] = Vec(rows);
    for (std::size_t i = 0; i < rows; ++i) b[l][i] = x[pos++];
  }
}

}  // namespace

double MlpObjective::value(const Vec& x) const {
  if (x.size() != n_params_)
    throw std::invalid_argument("mlp value: wrong parameter count");
  std::vector<Matrix> w;
  std::vector<Vec> b;
  unpack(widths_, x, w, b);
  auto act = forward(widths_, data_.inputs, w, b);
  const Matrix& out = act.back();
  Matrix resid = out - data_.targets;
  double ss = kern::sumsq(resid.data(), resid.rows() * resid.cols());
  return 0.5 * ss / static_cast<double>(data_.inputs.rows());
}

Vec MlpObjective::gradient(const Vec& x) const {
  if (x.size() != n_params_)
    throw std::invalid_argument("mlp gradient: wrong parameter count");
  std::vector<Matrix> w;
  std::vector<Vec> b;
  unpack(widths_, x, w, b);
  auto act = forward(widths_, data_.inputs, w, b);

  std::size_t layers = widths_.size() - 1;
  std::size_t n = data_.inputs.rows();

  // delta for the linear output layer
  Matrix delta = act.back() - data_.targets;
  delta *= 1.0 / static_cast<double>(n);

  std::vector<Matrix> gw(layers);
  std::vector<Vec> gb(layers);
  for (std::size_t l1 = layers; l1-- > 0;) {
    gw[l1] = delta.transposed() * act[l1];
    gb[l1] = Vec(widths_[l1 + 1], 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths_[l1 + 1]; ++j)
        gb[l1][j] += delta(i, j);
    if (l1 > 0) {
      Matrix next = delta * w[l1];
      // tanh'(z) = 1 - a^2 on the hidden activation
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < widths_[l1]; ++j)
          next(i, j) *= 1.0 - act[l1](i, j) * act[l1](i, j);
      delta = std::move(next);
    }
  }

  Vec g(n_params_);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t i = 0; i < widths_[l + 1]; ++i)
      for (std::size_t j = 0; j < widths_[l]; ++j) g[pos++] = gw[l](i, j);
    for (std::size_t i = 0; i < widths_[l + 1]; ++i) g[pos++] = gb[l][i];
  }
  return g;
}

SymmetricMatrix MlpObjective::hessian(const Vec& x) const {
  if (x.size() != n_params_)
    throw std::invalid_argument("mlp hessian: wrong parameter count");
  Matrix h(n_params_, n_params_);
  Vec xp = x;
  for (std::size_t i = 0; i < n_params_; ++i) {
    double step = 1e-4 * (1.0 + std::fabs(x[i]));
    xp[i] = x[i] + step;
    Vec gp = gradient(xp);
    xp[i] = x[i] - step;
    Vec gm = gradient(xp);
    xp[i] = x[i];
    double inv = 1.0 / (2.0 * step);
    for (std::size_t j = 0; j < n_params_; ++j)
      h(i, j) = (gp[j] - gm[j]) * inv;
  }
  return SymmetricMatrix::from_symmetrized(h);
}

Vec MlpObjective::initial_parameters() const {
  Rng rng(seed_);
  Vec x(n_params_);
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    double scale = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    for (std::size_t i = 0; i < widths_[l + 1] * widths_[l]; ++i)
      x[pos++] = scale * rng.next_gaussian();
    for (std::size_t i = 0; i < widths_[l + 1]; ++i)
      x[pos++] = 0.1 * rng.next_gaussian();
  }
  return x;
}

std::unique_ptr<MlpObjective> mlp_objective(std::vector<std::size_t> widths,
                                            Dataset data, std::uint64_t seed) {
  return std::make_unique<MlpObjective>(std::move(widths), std::move(data),
                                        seed);
}

}  // namespace tsfn::obj
