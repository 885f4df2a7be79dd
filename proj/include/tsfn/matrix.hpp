#pragma once
// Dense row-major matrix and exact-symmetry wrapper, plus small vector
// helpers shared across modules. Heavy products go through tsfn::kern.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsfn/kernels.hpp"
#include "tsfn/rng.hpp"

namespace tsfn {

using Vec = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(const std::vector<Vec>& rows);
  static Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Matrix transposed() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix& operator*=(double alpha);

  Vec apply(const Vec& x) const;             // A x
  Vec apply_transposed(const Vec& x) const;  // A^T x

  Vec column(std::size_t j) const;
  void set_column(std::size_t j, const Vec& v);

  double max_abs() const;
  double frobenius_norm() const;
  bool is_finite() const;
  bool is_symmetric_exact() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(double alpha, const Matrix& m);

// Symmetric matrix with bitwise-equal mirrored entries.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix m);

  // builds (M + M^T)/2, for inputs symmetric only up to roundoff
  static SymmetricMatrix from_symmetrized(const Matrix& m);
  static SymmetricMatrix diagonal(const Vec& d);
  static SymmetricMatrix identity(std::size_t n) {
    return SymmetricMatrix(Matrix::identity(n));
  }

  std::size_t dim() const { return mat_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return mat_(i, j); }
  const Matrix& matrix() const { return mat_; }

 private:
  Matrix mat_;
};

// vector helpers

inline double vec_dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("vec_dot: size mismatch");
  return kern::dot(a.data(), b.data(), a.size());
}

inline double vec_norm(const Vec& a) {
  return std::sqrt(kern::sumsq(a.data(), a.size()));
}

inline void vec_axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("vec_axpy: size mismatch");
  kern::axpy(alpha, x.data(), y.data(), x.size());
}

inline void vec_scale(double alpha, Vec& x) {
  kern::scal(alpha, x.data(), x.size());
}

inline Vec vec_sub(const Vec& a, const Vec& b) {
  Vec r = a;
  vec_axpy(-1.0, b, r);
  return r;
}

inline Vec vec_add(const Vec& a, const Vec& b) {
  Vec r = a;
  vec_axpy(1.0, b, r);
  return r;
}

bool vec_is_finite(const Vec& v);

}  // namespace tsfn
