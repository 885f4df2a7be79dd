#include "tsfn/qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tsfn/kernels.hpp"
#include "tsfn/linalg.hpp"
#include "tsfn/rng.hpp"

namespace tsfn::qsim {

namespace {

constexpr double kTol = 1e-10;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// in-place DFT with kernel e^{-2 pi i k y / M}, scaled by 1 / sqrt(M)
void inverse_qft(CVec& a) {
  std::size_t m = a.size();
  for (std::size_t i = 1, j = 0; i < m; ++i) {
    std::size_t bit = m >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= m; len <<= 1) {
    Complex wlen = std::polar(1.0, -kTwoPi / static_cast<double>(len));
    for (std::size_t i = 0; i < m; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        Complex u = a[i + k];
        Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (auto& x : a) x *= scale;
}

// fails when the hermitized input shifted by tol is not positive definite
bool cholesky_psd(const CMatrix& h, double shift) {
  std::size_t n = h.rows();
  CMatrix l(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex d = h(k, k) + shift;
    for (std::size_t j = 0; j < k; ++j) d -= l(k, j) * std::conj(l(k, j));
    if (d.real() <= 0.0 || !std::isfinite(d.real())) return false;
    double diag = std::sqrt(d.real());
    l(k, k) = diag;
    for (std::size_t i = k + 1; i < n; ++i) {
      Complex s = h(i, k) + (i == k ? shift : 0.0);
      for (std::size_t j = 0; j < k; ++j) s -= l(i, j) * std::conj(l(k, j));
      l(i, k) = s / diag;
    }
  }
  return true;
}

Matrix pad_symmetric(const SymmetricMatrix& h, std::size_t d) {
  const Matrix& m = h.matrix();
  Matrix out(d, d);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

struct Spectrum {
  linalg::EigenDecomposition eig;
  double lambda_sq_sum;
};

Spectrum hessian_spectrum(const SymmetricMatrix& h) {
  Spectrum s{linalg::sym_eig(h), 0.0};
  for (double l : s.eig.eigenvalues) s.lambda_sq_sum += l * l;
  if (s.lambda_sq_sum <= 0.0)
    throw std::domain_error("phase_estimation: zero matrix");
  return s;
}

}  // namespace

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::operator*(const CMatrix& rhs) const {
  if (cols_ != rhs.rows_)
    throw std::invalid_argument("CMatrix: shape mismatch in multiply");
  CMatrix out(rows_, rhs.cols_);
  kern::zmatmul(data_.data(), rhs.data_.data(), out.data_.data(), rows_,
                cols_, rhs.cols_);
  return out;
}

CMatrix CMatrix::operator+(const CMatrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("CMatrix: shape mismatch in add");
  CMatrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
  return out;
}

CMatrix CMatrix::operator-(const CMatrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("CMatrix: shape mismatch in subtract");
  CMatrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
  return out;
}

CMatrix& CMatrix::operator*=(Complex scale) {
  for (auto& x : data_) x *= scale;
  return *this;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      out(j, i) = std::conj((*this)(i, j));
  return out;
}

Complex CMatrix::trace() const {
  if (rows_ != cols_) throw std::invalid_argument("CMatrix: trace of non-square");
  Complex t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& x : data_) m = std::max(m, std::abs(x));
  return m;
}

CVec CMatrix::apply(const CVec& x) const {
  if (x.size() != cols_)
    throw std::invalid_argument("CMatrix: apply length mismatch");
  CVec out(rows_, 0.0);
  kern::zmatmul(data_.data(), x.data(), out.data(), rows_, cols_, 1);
  return out;
}

CMatrix CMatrix::kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows_ * b.rows_, a.cols_ * b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t j = 0; j < a.cols_; ++j) {
      Complex s = a(i, j);
      for (std::size_t k = 0; k < b.rows_; ++k)
        for (std::size_t l = 0; l < b.cols_; ++l)
          out(i * b.rows_ + k, j * b.cols_ + l) = s * b(k, l);
    }
  return out;
}

CMatrix CMatrix::partial_trace_first(const CMatrix& x, std::size_t d1,
                                     std::size_t d2) {
  if (x.rows() != d1 * d2 || x.cols() != d1 * d2)
    throw std::invalid_argument("partial_trace_first: shape mismatch");
  CMatrix out(d2, d2);
  for (std::size_t j = 0; j < d2; ++j)
    for (std::size_t jp = 0; jp < d2; ++jp) {
      Complex s = 0.0;
      for (std::size_t m = 0; m < d1; ++m) s += x(m * d2 + j, m * d2 + jp);
      out(j, jp) = s;
    }
  return out;
}

QuantumState::QuantumState(std::size_t n, CVec amps)
    : n_qubits(n), amplitudes(std::move(amps)) {
  if (amplitudes.size() != (std::size_t{1} << n_qubits))
    throw std::invalid_argument("QuantumState: length is not 2^n_qubits");
  double norm_sq = 0.0;
  for (const auto& a : amplitudes) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw std::invalid_argument("QuantumState: non-finite amplitude");
    norm_sq += std::norm(a);
  }
  if (std::fabs(norm_sq - 1.0) > kTol)
    throw std::invalid_argument("QuantumState: not normalized");
}

DensityMatrix::DensityMatrix(const CMatrix& entries) : entries_(entries) {
  std::size_t n = entries_.rows();
  if (n == 0 || entries_.cols() != n || !is_pow2(n))
    throw std::invalid_argument(
        "DensityMatrix: dimension must be a nonzero power of 2");
  double herm_err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Complex a = entries_(i, j), b = std::conj(entries_(j, i));
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
        throw std::invalid_argument("DensityMatrix: non-finite entry");
      herm_err = std::max(herm_err, std::abs(a - b));
    }
  if (herm_err > kTol)
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Complex v = 0.5 * (entries_(i, j) + std::conj(entries_(j, i)));
      entries_(i, j) = v;
      entries_(j, i) = std::conj(v);
    }
  if (std::abs(entries_.trace() - 1.0) > kTol)
    throw std::invalid_argument("DensityMatrix: trace is not 1");
  double shift = kTol + static_cast<double>(n) * 1e-16 * entries_.max_abs();
  if (!cholesky_psd(entries_, shift))
    throw std::invalid_argument("DensityMatrix: not positive semidefinite");
}

HermitianEig heig(const CMatrix& h) {
  std::size_t n = h.rows();
  if (n == 0 || h.cols() != n)
    throw std::invalid_argument("heig: square input required");
  Matrix e(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double a = 0.5 * (h(i, j).real() + h(j, i).real());
      double b = 0.5 * (h(i, j).imag() - h(j, i).imag());
      e(i, j) = a;
      e(n + i, n + j) = a;
      e(i, n + j) = -b;
      e(n + i, j) = b;
    }
  auto dec = linalg::sym_eig(SymmetricMatrix::from_symmetrized(e));

  HermitianEig out;
  out.eigenvectors = CMatrix(n, n);
  std::size_t accepted = 0;
  for (std::size_t col = 0; col < 2 * n && accepted < n; ++col) {
    CVec v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = Complex(dec.eigenvectors(i, col), dec.eigenvectors(n + i, col));
    // complex Gram-Schmidt against the accepted vectors; the doubled
    // embedding yields each eigenvector twice (v and iv)
    for (std::size_t a = 0; a < accepted; ++a) {
      Complex ip = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        ip += std::conj(out.eigenvectors(i, a)) * v[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= ip * out.eigenvectors(i, a);
    }
    double norm_sq = 0.0;
    for (const auto& x : v) norm_sq += std::norm(x);
    if (norm_sq < 1e-8) continue;
    double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, accepted) = v[i] * inv;
    out.eigenvalues.push_back(dec.eigenvalues[col]);
    ++accepted;
  }
  if (accepted != n)
    throw std::runtime_error("heig: eigenvector recovery failed");
  return out;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  auto eig = heig(a.entries() - b.entries());
  double s = 0.0;
  for (double l : eig.eigenvalues) s += std::fabs(l);
  return 0.5 * s;
}

double fidelity_to_pure(const DensityMatrix& rho, const CVec& psi) {
  CVec r = rho.entries().apply(psi);
  Complex f = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) f += std::conj(psi[i]) * r[i];
  return f.real();
}

QuantumState encode_gradient(const Vec& grad) {
  if (grad.empty())
    throw std::invalid_argument("encode_gradient: empty gradient");
  if (!vec_is_finite(grad))
    throw std::invalid_argument("encode_gradient: non-finite gradient");
  double norm = vec_norm(grad);
  if (norm == 0.0)
    throw std::domain_error("encode_gradient: zero gradient, already converged");
  std::size_t d = std::bit_ceil(grad.size());
  CVec amps(d, 0.0);
  for (std::size_t i = 0; i < grad.size(); ++i) amps[i] = grad[i] / norm;
  return QuantumState(static_cast<std::size_t>(std::countr_zero(d)),
                      std::move(amps));
}

DensityMatrix prepare_rho_hh(const SymmetricMatrix& h, Mode mode,
                             double c_amp) {
  std::size_t n = h.dim();
  std::size_t d = std::bit_ceil(n);
  Matrix hp = pad_symmetric(h, d);
  double max_entry = hp.max_abs();
  if (max_entry == 0.0)
    throw std::domain_error("prepare_rho_hh: zero matrix");

  if (mode == Mode::oracle) {
    Matrix prod = hp * hp.transposed();
    double tr = 0.0;
    for (std::size_t i = 0; i < d; ++i) tr += prod(i, i);
    CMatrix out(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out(i, j) = prod(i, j) / tr;
    return DensityMatrix(out);
  }

  if (d > 16)
    throw std::invalid_argument("prepare_rho_hh: circuit mode needs dim <= 16");
  double c = c_amp == 0.0 ? max_entry : c_amp;
  if (c < max_entry)
    throw std::invalid_argument(
        "prepare_rho_hh: rotation amplitude above 1, c_amp < max|H_ij|");

  // one dephased branch per column j, evolved stage by stage as a pure
  // (unnormalized) vector over (row i, value register v, rotation ancilla a)
  double alpha = 1.0 / static_cast<double>(d);
  CMatrix rho5(d, d);
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    std::map<double, std::size_t> value_index{{0.0, 0}};
    for (std::size_t i = 0; i < d; ++i)
      value_index.emplace(hp(i, j), value_index.size());
    std::size_t m = value_index.size();
    std::vector<double> values(m);
    for (const auto& [val, idx] : value_index) values[idx] = val;

    std::vector<double> psi(d * m * 2, 0.0);
    auto at = [&](std::size_t i, std::size_t v, std::size_t a) -> double& {
      return psi[(i * m + v) * 2 + a];
    };
    // rho_0: uniform dephased branch
    for (std::size_t i = 0; i < d; ++i) at(i, 0, 0) = alpha;
    // rho_1: value oracle writes H_ij into the register
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t v = value_index.at(hp(i, j));
      if (v != 0) std::swap(at(i, v, 0), at(i, 0, 0));
    }
    // rho_2: controlled rotation on the ancilla by the register value
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t v = 0; v < m; ++v) {
        double ratio = values[v] / c;
        double stay = std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
        at(i, v, 1) = ratio * at(i, v, 0);
        at(i, v, 0) *= stay;
      }
    // rho_3: postselect the ancilla on |1>, unnormalized
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t v = 0; v < m; ++v) at(i, v, 0) = 0.0;
    // rho_4: uncompute the value register
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t v = value_index.at(hp(i, j));
      if (v != 0) std::swap(at(i, 0, 1), at(i, v, 1));
    }
    // rho_5: accumulate the branch outer product over the row index
    for (std::size_t i = 0; i < d; ++i) {
      double ai = at(i, 0, 1);
      total += ai * ai;
      for (std::size_t ip = 0; ip < d; ++ip)
        rho5(i, ip) += ai * at(ip, 0, 1);
    }
  }
  rho5 *= Complex(1.0 / total, 0.0);
  return DensityMatrix(rho5);
}

DensityMatrix swap_step(const DensityMatrix& rho, const DensityMatrix& sigma,
                        double dt) {
  std::size_t d = rho.dim();
  if (sigma.dim() != d)
    throw std::invalid_argument("swap_step: dimension mismatch");
  if (!std::isfinite(dt)) throw std::invalid_argument("swap_step: bad dt");

  std::size_t dd = d * d;
  CMatrix x = CMatrix::kron(rho.entries(), sigma.entries());
  // e^{-iS dt} = cos(dt) I - i sin(dt) S since S^2 = I
  CMatrix e(dd, dd);
  Complex diag(std::cos(dt), 0.0);
  Complex off(0.0, -std::sin(dt));
  for (std::size_t a1 = 0; a1 < d; ++a1)
    for (std::size_t a2 = 0; a2 < d; ++a2) {
      e(a1 * d + a2, a1 * d + a2) += diag;
      e(a1 * d + a2, a2 * d + a1) += off;
    }
  CMatrix y = e * x * e.adjoint();
  return DensityMatrix(CMatrix::partial_trace_first(y, d, d));
}

DensityMatrix density_exponentiation(const DensityMatrix& rho,
                                     const DensityMatrix& sigma, double t,
                                     std::size_t n_steps) {
  if (n_steps == 0)
    throw std::invalid_argument("density_exponentiation: n_steps must be >= 1");
  double dt = t / static_cast<double>(n_steps);
  DensityMatrix out = sigma;
  for (std::size_t s = 0; s < n_steps; ++s) out = swap_step(rho, out, dt);
  return out;
}

EigenReadout phase_estimation(const SymmetricMatrix& h,
                              const QuantumState& chi,
                              const PipelineConfig& config) {
  std::size_t n = h.dim();
  std::size_t d = std::bit_ceil(n);
  if (chi.dim() != d)
    throw std::invalid_argument("phase_estimation: state dimension mismatch");
  if (config.pe_bits == 0)
    throw std::invalid_argument("phase_estimation: pe_bits must be >= 1");
  if (!(config.t > 0.0))
    throw std::invalid_argument("phase_estimation: t must be > 0");
  if (config.mode == Mode::oracle && d > 2048)
    throw std::invalid_argument("phase_estimation: oracle mode needs dim <= 2048");
  if (config.mode == Mode::circuit && d > 16)
    throw std::invalid_argument("phase_estimation: circuit mode needs dim <= 16");

  Spectrum spec = hessian_spectrum(h);
  double mu_max = spec.eig.eigenvalues[0] * spec.eig.eigenvalues[0] /
                  spec.lambda_sq_sum;
  if (mu_max * config.t >= kTwoPi)
    throw std::invalid_argument("phase_estimation: phase wraparound");

  EigenReadout out;
  out.lambda_sq_sum = spec.lambda_sq_sum;
  out.t = config.t;
  out.pe_bits = config.pe_bits;
  out.eigenvectors = Matrix(d, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < n; ++c)
      out.eigenvectors(i, c) = spec.eig.eigenvectors(i, c);

  // signed amplitudes of chi in the eigenbasis
  Vec eta(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    Complex ip = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      ip += spec.eig.eigenvectors(i, c) * chi.amplitudes[i];
    if (std::fabs(ip.imag()) > 1e-12)
      throw std::invalid_argument("phase_estimation: complex amplitudes");
    eta[c] = ip.real();
  }

  std::size_t grid = std::size_t{1} << config.pe_bits;
  double bin = kTwoPi / config.t / static_cast<double>(grid);

  if (config.mode == Mode::oracle) {
    for (std::size_t c = 0; c < n; ++c) {
      double mu = spec.eig.eigenvalues[c] * spec.eig.eigenvalues[c] /
                  spec.lambda_sq_sum;
      auto y = static_cast<std::size_t>(
          std::llround(mu * config.t / kTwoPi * static_cast<double>(grid)));
      if (y >= grid)
        throw std::invalid_argument("phase_estimation: phase wraparound");
      out.components.push_back({static_cast<double>(y) * bin, eta[c], c});
    }
    return out;
  }

  // circuit mode: b-qubit register, controlled powers of e^{i rho t},
  // inverse QFT, then per-eigencomponent maximum-probability bins
  DensityMatrix rho = prepare_rho_hh(h, Mode::circuit);
  HermitianEig re = heig(rho.entries());
  CMatrix u(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    Complex phase = std::polar(1.0, re.eigenvalues[a] * config.t);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        u(i, j) += re.eigenvectors(i, a) * phase *
                   std::conj(re.eigenvectors(j, a));
  }

  CVec state(grid * d);
  double amp0 = 1.0 / std::sqrt(static_cast<double>(grid));
  for (std::size_t k = 0; k < grid; ++k)
    for (std::size_t j = 0; j < d; ++j)
      state[k * d + j] = amp0 * chi.amplitudes[j];
  CMatrix w = u;
  for (std::size_t l = 0; l < config.pe_bits; ++l) {
    if (l > 0) w = w * w;
    CVec block(d);
    for (std::size_t k = 0; k < grid; ++k) {
      if (!((k >> l) & 1)) continue;
      std::copy(state.begin() + static_cast<std::ptrdiff_t>(k * d),
                state.begin() + static_cast<std::ptrdiff_t>((k + 1) * d),
                block.begin());
      CVec applied = w.apply(block);
      std::copy(applied.begin(), applied.end(),
                state.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
  }
  CVec column(grid);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < grid; ++k) column[k] = state[k * d + j];
    inverse_qft(column);
    for (std::size_t k = 0; k < grid; ++k) state[k * d + j] = column[k];
  }

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t best = 0;
    double best_mass = -1.0;
    for (std::size_t y = 0; y < grid; ++y) {
      Complex amp = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        amp += spec.eig.eigenvectors(i, c) * state[y * d + i];
      double mass = std::norm(amp);
      if (mass > best_mass) {
        best_mass = mass;
        best = y;
      }
    }
    out.components.push_back({static_cast<double>(best) * bin, eta[c], c});
  }
  return out;
}

ConditionalInversion conditional_invert(const EigenReadout& readout,
                                        const PipelineConfig& config) {
  if (readout.components.empty())
    throw std::invalid_argument("conditional_invert: empty readout");
  if (readout.pe_bits == 0 || !(readout.t > 0.0) ||
      !(readout.lambda_sq_sum > 0.0))
    throw std::invalid_argument("conditional_invert: malformed readout");
  if (!(config.threshold > 0.0))
    throw std::invalid_argument("conditional_invert: threshold must be > 0");
  if (config.c_rot < 0.0)
    throw std::invalid_argument("conditional_invert: c_rot must be >= 0");

  ConditionalInversion out;
  out.amplitudes.assign(readout.components.size(), 0.0);
  // compare in register units with the threshold quantized onto the same
  // phase grid as the estimates, so a component whose true eigenvalue sits
  // exactly at the threshold survives rounding in either direction
  double grid_units = static_cast<double>(std::size_t{1} << readout.pe_bits) *
                      readout.t / kTwoPi;
  long long y_thr = std::llround(config.threshold * config.threshold /
                                 readout.lambda_sq_sum * grid_units);
  double min_retained = 0.0;
  for (std::size_t i = 0; i < readout.components.size(); ++i) {
    double lsq = readout.components[i].lambda_bar_sq;
    long long y = std::llround(lsq * grid_units);
    if (y <= 0 || y < y_thr) continue;
    out.retained.push_back(i);
    double lb = std::sqrt(lsq);
    min_retained = out.retained.size() == 1 ? lb : std::min(min_retained, lb);
  }
  if (out.retained.empty())
    throw std::domain_error("conditional_invert: no components retained");

  double thr_norm = config.threshold / std::sqrt(readout.lambda_sq_sum);
  double c = config.c_rot == 0.0 ? std::min(thr_norm, min_retained)
                                 : config.c_rot;
  if (c > min_retained * (1.0 + 1e-12))
    throw std::invalid_argument(
        "conditional_invert: c_rot above the smallest retained |lambda_bar|");

  double p = 0.0;
  for (std::size_t i : out.retained) {
    double a = readout.components[i].eta * c /
               std::sqrt(readout.components[i].lambda_bar_sq);
    out.amplitudes[i] = a;
    p += a * a;
  }
  if (p <= 0.0)
    throw std::domain_error("conditional_invert: no amplitude retained");
  double inv = 1.0 / std::sqrt(p);
  for (std::size_t i : out.retained) out.amplitudes[i] *= inv;
  out.c_used = c;
  out.p_success = p;
  out.repetitions = 1.0 / p;
  out.repetitions_amplified = 1.0 / std::sqrt(p);
  return out;
}

SignedReadout readout_signed(const Vec& alpha, std::size_t p,
                             std::size_t shots, std::uint64_t seed) {
  if (p == 0 || p > 30)
    throw std::invalid_argument("readout_signed: p outside [1, 30]");
  std::size_t grid = std::size_t{1} << p;
  if (alpha.size() > grid)
    throw std::invalid_argument("readout_signed: 2^p below the state size");
  if (!vec_is_finite(alpha))
    throw std::invalid_argument("readout_signed: non-finite amplitudes");
  double norm_sq = kern::sumsq(alpha.data(), alpha.size());
  if (std::fabs(norm_sq - 1.0) > 1e-8)
    throw std::invalid_argument("readout_signed: input is not normalized");

  SignedReadout out;
  out.sign_uncertain.assign(alpha.size(), 0);
  if (shots == 0) {
    out.alpha_hat = alpha;
    return out;
  }

  // joint (+-, j) measurement of (1/sqrt2)(|0>|+>^p + |1>|alpha>) after a
  // Hadamard on the flag qubit
  double ref = std::pow(2.0, -0.5 * static_cast<double>(p));
  std::vector<double> cumulative(2 * grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < grid; ++j) {
    double a = j < alpha.size() ? alpha[j] : 0.0;
    double plus = ref + a, minus = ref - a;
    acc += 0.25 * plus * plus;
    cumulative[2 * j] = acc;
    acc += 0.25 * minus * minus;
    cumulative[2 * j + 1] = acc;
  }

  Rng rng(seed);
  std::vector<std::size_t> counts(2 * grid, 0);
  for (std::size_t s = 0; s < shots; ++s) {
    double u = rng.next_uniform() * acc;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    counts[static_cast<std::size_t>(it - cumulative.begin())]++;
  }

  out.alpha_hat.assign(alpha.size(), 0.0);
  double scale = 1.0 / ref;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    double p_plus =
        static_cast<double>(counts[2 * j]) / static_cast<double>(shots);
    double p_minus =
        static_cast<double>(counts[2 * j + 1]) / static_cast<double>(shots);
    out.alpha_hat[j] = scale * (p_plus - p_minus);
    double sigma =
        scale * std::sqrt((p_plus + p_minus) / static_cast<double>(shots));
    if (counts[2 * j] + counts[2 * j + 1] == 0 ||
        std::fabs(out.alpha_hat[j]) < 2.0 * sigma)
      out.sign_uncertain[j] = 1;
  }
  return out;
}

HybridResult hybrid_step(const SymmetricMatrix& h, const Vec& grad,
                         const PipelineConfig& config, std::uint64_t seed) {
  if (grad.size() != h.dim())
    throw std::invalid_argument("hybrid_step: dimension mismatch");
  double grad_norm = vec_norm(grad);

  QuantumState chi = encode_gradient(grad);
  EigenReadout readout = phase_estimation(h, chi, config);
  ConditionalInversion inv = conditional_invert(readout, config);

  Vec position = readout.eigenvectors.apply(inv.amplitudes);
  std::size_t p = config.p == 0 ? chi.n_qubits : config.p;
  SignedReadout sr = readout_signed(position, std::max<std::size_t>(p, 1),
                                    config.shots, seed);

  double scale = grad_norm * std::sqrt(inv.p_success) /
                 (inv.c_used * std::sqrt(readout.lambda_sq_sum));
  HybridResult out;
  out.direction.assign(grad.size(), 0.0);
  for (std::size_t i = 0; i < grad.size(); ++i)
    out.direction[i] = scale * sr.alpha_hat[i];

  out.diagnostics.k = inv.retained.size();
  out.diagnostics.p_success = inv.p_success;
  out.diagnostics.repetitions = inv.repetitions;
  out.diagnostics.repetitions_amplified = inv.repetitions_amplified;
  out.diagnostics.pe_bits = config.pe_bits;
  for (std::size_t i : inv.retained)
    out.diagnostics.lambda_bar.push_back(
        std::sqrt(readout.components[i].lambda_bar_sq * readout.lambda_sq_sum));
  out.diagnostics.sign_uncertain.assign(
      sr.sign_uncertain.begin(),
      sr.sign_uncertain.begin() + static_cast<std::ptrdiff_t>(grad.size()));
  return out;
}

}  // namespace tsfn::qsim
