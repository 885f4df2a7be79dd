#pragma once
// Dense arithmetic kernels with runtime-dispatched SIMD variants.
//
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2
// variant. The active table is chosen once per process from CPU capabilities;
// TSFN_KERNELS=scalar|avx2|auto overrides the choice. The AVX2 variants are
// equivalence-tested against the scalar references (FMA contraction changes
// the rounding of reductions, so equality is up to a small relative tolerance,
// not bit-exact).

#include <complex>
#include <cstddef>

namespace tsfn::kern {

using cplx = std::complex<double>;

struct Kernels {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i x[i]^2
  double (*sumsq)(const double* x, std::size_t n);
  // y[i] += alpha*x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
  // plane rotation: (x[i], y[i]) <- (c*x[i] + s*y[i], -s*x[i] + c*y[i])
  void (*rot)(double* x, double* y, double c, double s, std::size_t n);
  // row-major C(m,n) = A(m,k) * B(k,n); C is overwritten
  void (*matmul)(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n);
  // complex analogue of matmul
  void (*zmatmul)(const cplx* a, const cplx* b, cplx* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

// Table selected at first use (cpuid + TSFN_KERNELS override); never null.
const Kernels& active();

// Reference table, always available.
const Kernels& scalar_table();

// AVX2 table, or nullptr when the build or the CPU lacks AVX2+FMA.
const Kernels* avx2_table();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double sumsq(const double* x, std::size_t n) {
  return active().sumsq(x, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scal(double alpha, double* x, std::size_t n) {
  active().scal(alpha, x, n);
}
inline void rot(double* x, double* y, double c, double s, std::size_t n) {
  active().rot(x, y, c, s, n);
}
inline void matmul(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  active().matmul(a, b, c, m, k, n);
}
inline void zmatmul(const cplx* a, const cplx* b, cplx* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  active().zmatmul(a, b, c, m, k, n);
}

}  // namespace tsfn::kern
