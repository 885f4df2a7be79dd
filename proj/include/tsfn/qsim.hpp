#pragma once
// Desk-scale exact simulator of the quantum pipeline: amplitude encoding,
// density-matrix preparation of HH^T, repeated-swap exponentiation, phase
// estimation, conditional rotation with postselection, and sign-recovering
// readout.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tsfn/matrix.hpp"

namespace tsfn::qsim {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

// Row-major complex matrix, sized for register simulation.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  static CMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Complex& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  const Complex& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  Complex* data() { return data_.data(); }
  const Complex* data() const { return data_.data(); }

  CMatrix operator*(const CMatrix& rhs) const;
  CMatrix operator+(const CMatrix& rhs) const;
  CMatrix operator-(const CMatrix& rhs) const;
  CMatrix& operator*=(Complex scale);
  CMatrix adjoint() const;
  Complex trace() const;
  double max_abs() const;
  CVec apply(const CVec& x) const;

  static CMatrix kron(const CMatrix& a, const CMatrix& b);
  // trace out the first factor of a (d1*d2)-dim product space
  static CMatrix partial_trace_first(const CMatrix& x, std::size_t d1,
                                     std::size_t d2);

 private:
  std::size_t rows_ = 0, cols_ = 0;
  CVec data_;
};

// Normalized pure state over 2^n_qubits basis states. Construction rejects
// wrong lengths and norms off by more than 1e-10.
struct QuantumState {
  std::size_t n_qubits = 0;
  CVec amplitudes;

  QuantumState(std::size_t n, CVec amps);
  std::size_t dim() const { return amplitudes.size(); }
};

// Hermitian, unit-trace, PSD matrix of power-of-2 dimension; construction
// validates all three (tolerance 1e-10) and hermitizes exactly.
class DensityMatrix {
 public:
  explicit DensityMatrix(const CMatrix& entries);
  std::size_t dim() const { return entries_.rows(); }
  const CMatrix& entries() const { return entries_; }

 private:
  CMatrix entries_;
};

// Eigenvalues descending by magnitude, eigenvector i is column i.
struct HermitianEig {
  Vec eigenvalues;
  CMatrix eigenvectors;
};

// Complex Hermitian eigendecomposition via the doubled real symmetric
// embedding [[A, -B], [B, A]].
HermitianEig heig(const CMatrix& h);

// (1/2) sum |eig(a - b)|
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// <psi| rho |psi>
double fidelity_to_pure(const DensityMatrix& rho, const CVec& psi);

enum class Mode { circuit, oracle };

struct PipelineConfig {
  std::size_t pe_bits = 12;       // phase register width
  double t = std::numbers::pi;    // evolution time, max rho eigenvalue is 1
  std::size_t n_trotter = 128;    // swap-trick repetitions
  double c_rot = 0.0;             // rotation constant on the normalized
                                  // eigenvalue scale; 0 = min retained
  double threshold = 0.0;         // eigenvalue cutoff on the scale of H
  std::size_t shots = 0;          // readout samples, 0 = exact amplitudes
  std::size_t p = 0;              // readout register width, 0 = fit to N
  Mode mode = Mode::oracle;
};

// grad normalized into computational-basis amplitudes, zero-padded to the
// next power of 2. Throws std::domain_error on a zero gradient (the caller
// is already converged) and std::invalid_argument on non-finite input.
QuantumState encode_gradient(const Vec& grad);

// HH^T / tr(HH^T). Oracle mode forms the product directly; circuit mode
// (dim <= 16) runs the register calculus stage by stage: uniform state,
// dephasing, value-register oracle, controlled rotation with constant
// c_amp, postselection on the rotation ancilla, uncompute, partial trace.
// c_amp = 0 picks max|H_ij|; an explicit c_amp < max|H_ij| throws
// std::invalid_argument (rotation amplitude above 1).
DensityMatrix prepare_rho_hh(const SymmetricMatrix& h, Mode mode,
                             double c_amp = 0.0);

// tr_1(e^{-iS dt} rho (x) sigma e^{iS dt}) with S the swap operator on the
// doubled space, computed literally.
DensityMatrix swap_step(const DensityMatrix& rho, const DensityMatrix& sigma,
                        double dt);

// n_steps swap_step applications with dt = t / n_steps.
DensityMatrix density_exponentiation(const DensityMatrix& rho,
                                     const DensityMatrix& sigma, double t,
                                     std::size_t n_steps);

struct EigenComponent {
  double lambda_bar_sq;  // rounded eigenvalue of rho_HH, grid (2pi/t)/2^b
  double eta;            // signed amplitude of chi on this eigenvector
  std::size_t index;
};

struct EigenReadout {
  std::vector<EigenComponent> components;
  double lambda_sq_sum = 0.0;  // tr(HH^T), restores the physical scale
  double t = 0.0;
  std::size_t pe_bits = 0;
  Matrix eigenvectors;  // dim x components, column i pairs with entry i
};

// Oracle mode (dim <= 2048): exact spectrum of rho_HH with phases rounded
// to pe_bits. Circuit mode (dim <= 16): full register simulation with
// controlled powers of e^{i rho t} and an inverse QFT; estimates are the
// most probable register bin per eigencomponent. Throws
// std::invalid_argument when max-eigenvalue * t reaches 2pi (wraparound).
EigenReadout phase_estimation(const SymmetricMatrix& h,
                              const QuantumState& chi,
                              const PipelineConfig& config);

struct ConditionalInversion {
  Vec amplitudes;  // aligned with readout components, 0 where discarded
  std::vector<std::size_t> retained;
  double c_used = 0.0;
  double p_success = 0.0;
  double repetitions = 0.0;            // 1 / p_success
  double repetitions_amplified = 0.0;  // 1 / sqrt(p_success)
};

// Keeps components whose physical |lambda_bar| reaches config.threshold,
// scales each by c / lambda_bar, renormalizes, and reports
// p_success = sum |eta_i c / lambda_bar_i|^2. Throws std::domain_error when
// nothing survives, std::invalid_argument when c_rot exceeds the smallest
// retained |lambda_bar|.
ConditionalInversion conditional_invert(const EigenReadout& readout,
                                        const PipelineConfig& config);

struct SignedReadout {
  Vec alpha_hat;
  // set where |alpha_hat| is within two standard errors of zero
  std::vector<int> sign_uncertain;
};

// Measures the interference state (1/sqrt2)[|0>|+>^p + |1>|alpha>] jointly
// in the (+-, j) basis and inverts the exact probability model
// P(+-, j) = (2^{-p/2} +- alpha_j)^2 / 4. shots = 0 returns alpha exactly.
SignedReadout readout_signed(const Vec& alpha, std::size_t p,
                             std::size_t shots, std::uint64_t seed);

struct HybridDiagnostics {
  std::size_t k = 0;  // retained components
  double p_success = 0.0;
  double repetitions = 0.0;
  double repetitions_amplified = 0.0;
  std::size_t pe_bits = 0;
  Vec lambda_bar;  // retained estimates on the scale of H
  std::vector<int> sign_uncertain;
};

struct HybridResult {
  Vec direction;
  HybridDiagnostics diagnostics;
};

// encode_gradient -> prepare_rho_hh -> phase_estimation ->
// conditional_invert -> readout_signed, rescaled by ||grad|| and the
// Frobenius normalization of H so the direction is comparable to the
// classical truncated step.
HybridResult hybrid_step(const SymmetricMatrix& h, const Vec& grad,
                         const PipelineConfig& config, std::uint64_t seed = 0);

}  // namespace tsfn::qsim
