#pragma once
// Dense symmetric eigendecomposition, SVD, norms, and the truncated
// absolute pseudo-inverse used by the saddle-free Newton step.

#include <cstddef>
#include <utility>
#include <vector>

#include "tsfn/matrix.hpp"

namespace tsfn::linalg {

// Eigenvalues sorted by descending |lambda|; eigenvector i is column i.
struct EigenDecomposition {
  Vec eigenvalues;
  Matrix eigenvectors;
};

struct SvdDecomposition {
  Matrix u;             // m x p, orthonormal columns, p = min(m, n)
  Vec singular_values;  // p values, descending, >= 0
  Matrix v;             // n x p, orthonormal columns
  std::size_t rank;     // count of singular values above the rank tolerance
};

// Spectrum retained by magnitude thresholding.
struct TruncatedSpectrum {
  std::size_t k = 0;    // retained count
  double threshold = 0.0;
  Vec eigenvalues;      // retained signed eigenvalues, |.| descending
  Matrix eigenvectors;  // N x k, column i pairs with eigenvalues[i]
  double kappa_eff = 1.0;  // max|lambda| over threshold
};

struct NormPair {
  double spectral;
  double frobenius;
};

struct TruncationError {
  double spectral;
  double frobenius;
};

struct LowRankInverse {
  Matrix z;
  // false when sigma_r == sigma_{r+1} within tolerance; the returned matrix
  // is still a minimizer, just not the only one
  bool unique;
};

// Householder tridiagonalization + implicit-shift QL, 64 sweep cap.
// Throws std::invalid_argument on non-finite input, std::runtime_error if
// the QL iteration fails to converge.
EigenDecomposition sym_eig(const SymmetricMatrix& h);

// One-sided Jacobi SVD. Same error contract as sym_eig.
SvdDecomposition svd(const Matrix& a);

// (spectral, frobenius) norms; spectral comes from the SVD.
NormPair norms(const Matrix& a);

// Sum over |lambda_i| >= threshold of |lambda_i|^-1 s_i s_i^T.
// Throws std::invalid_argument for threshold <= 0, std::domain_error when
// no eigenvalue reaches the threshold.
std::pair<Matrix, TruncatedSpectrum> abs_pinv_truncated(
    const SymmetricMatrix& h, double threshold);

// Best rank-r approximation of A^-1 in Frobenius distance of Z*A to I:
// V_r diag(1/sigma_i) U_r^T. Throws std::domain_error when r exceeds the
// numerical rank, std::invalid_argument for r == 0.
LowRankInverse low_rank_inverse(const Matrix& a, std::size_t r);

// Eckart-Young errors of the best rank-k approximation of H under
// magnitude ordering: spectral = |lambda_{k+1}|, frobenius =
// sqrt(sum_{i>k} lambda_i^2). k may equal N, giving (0, 0).
TruncationError truncation_error(const SymmetricMatrix& h, std::size_t k);

}  // namespace tsfn::linalg
