#include "tsfn/matrix.hpp"

#include <cmath>

namespace tsfn {

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) throw std::invalid_argument("from_rows: no rows");
  std::size_t cols = rows[0].size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw std::invalid_argument("from_rows: ragged rows");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix Matrix::gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.data_) x = rng.next_gaussian();
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_)
    throw std::invalid_argument("Matrix::operator*: inner dim mismatch");
  Matrix out(rows_, rhs.cols_);
  kern::matmul(data(), rhs.data(), out.data(), rows_, cols_, rhs.cols_);
  return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("Matrix::operator+: shape mismatch");
  Matrix out = *this;
  kern::axpy(1.0, rhs.data(), out.data(), out.data_.size());
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("Matrix::operator-: shape mismatch");
  Matrix out = *this;
  kern::axpy(-1.0, rhs.data(), out.data(), out.data_.size());
  return out;
}

Matrix& Matrix::operator*=(double alpha) {
  kern::scal(alpha, data(), data_.size());
  return *this;
}

Matrix operator*(double alpha, const Matrix& m) {
  Matrix out = m;
  out *= alpha;
  return out;
}

Vec Matrix::apply(const Vec& x) const {
  if (x.size() != cols_)
    throw std::invalid_argument("Matrix::apply: size mismatch");
  Vec y(rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    y[i] = kern::dot(row(i), x.data(), cols_);
  return y;
}

Vec Matrix::apply_transposed(const Vec& x) const {
  if (x.size() != rows_)
    throw std::invalid_argument("Matrix::apply_transposed: size mismatch");
  Vec y(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    kern::axpy(x[i], row(i), y.data(), cols_);
  return y;
}

Vec Matrix::column(std::size_t j) const {
  Vec v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_column(std::size_t j, const Vec& v) {
  if (v.size() != rows_)
    throw std::invalid_argument("set_column: size mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

double Matrix::frobenius_norm() const {
  return std::sqrt(kern::sumsq(data(), data_.size()));
}

bool Matrix::is_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

bool Matrix::is_symmetric_exact() const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

SymmetricMatrix::SymmetricMatrix(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() == 0)
    throw std::invalid_argument("SymmetricMatrix: empty matrix");
  if (mat_.rows() != mat_.cols())
    throw std::invalid_argument("SymmetricMatrix: not square");
  if (!mat_.is_symmetric_exact())
    throw std::invalid_argument("SymmetricMatrix: entries not symmetric");
}

SymmetricMatrix SymmetricMatrix::from_symmetrized(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("from_symmetrized: not square");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return SymmetricMatrix(std::move(s));
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vec& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return SymmetricMatrix(std::move(m));
}

bool vec_is_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace tsfn
