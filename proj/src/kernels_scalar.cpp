#include <cstring>

#include "tsfn/kernels.hpp"

namespace tsfn::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void rot_scalar(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double xi = x[i];
    double yi = y[i];
    x[i] = c * xi + s * yi;
    y[i] = -s * xi + c * yi;
  }
}

void matmul_scalar(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double aip = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void zmatmul_scalar(const cplx* a, const cplx* b, cplx* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = cplx(0.0, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const cplx* arow = a + i * k;
    cplx* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      cplx aip = arow[p];
      const cplx* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        // manual complex madd keeps gcc from emitting the NaN-checked helper
        double ar = aip.real(), ai = aip.imag();
        double br = brow[j].real(), bi = brow[j].imag();
        crow[j] += cplx(ar * br - ai * bi, ar * bi + ai * br);
      }
    }
  }
}

const Kernels table = {
    "scalar",     dot_scalar,    sumsq_scalar,  axpy_scalar,
    scal_scalar,  rot_scalar,    matmul_scalar, zmatmul_scalar,
};

}  // namespace

const Kernels& scalar_table() { return table; }

}  // namespace tsfn::kern
