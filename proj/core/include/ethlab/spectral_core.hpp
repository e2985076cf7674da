#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ethlab {

using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Largest dimension handled by the dense kernels (N = 13 qubits).
inline constexpr Index kMaxDenseDim = Index{1} << 13;

/// Dense Hermitian matrix in a fixed computational basis.
///
/// Construction validates squareness and Hermiticity: the relative Frobenius
/// deviation ||H - H^dagger||_F / ||H||_F must not exceed 1e-12.
class HermitianMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-12;

  explicit HermitianMatrix(ComplexMatrix entries);

  Index dim() const noexcept { return entries_.rows(); }
  const ComplexMatrix& entries() const noexcept { return entries_; }
  /// True when every imaginary part is exactly zero.
  bool is_real() const noexcept { return real_; }

 private:
  ComplexMatrix entries_;
  bool real_ = false;
};

using HamiltonianMatrix = HermitianMatrix;

/// Ascending eigenvalues plus the unitary of column eigenvectors.
///
/// Values are immutable and cheap to copy; the basis is shared. A spectrum
/// produced natively in its own eigenbasis (synthetic spectra) carries no
/// stored basis and reports the identity.
class EnergySpectrum {
 public:
  EnergySpectrum(RealVector eigenvalues, ComplexMatrix basis);
  /// Spectrum whose basis is the identity.
  explicit EnergySpectrum(RealVector eigenvalues);

  Index dim() const noexcept { return eigenvalues_.size(); }
  const RealVector& eigenvalues() const noexcept { return eigenvalues_; }
  double energy(Index n) const { return eigenvalues_(n); }
  double bandwidth() const noexcept;
  /// Mean level spacing over the middle 60% of the spectrum.
  double bulk_level_spacing() const;

  bool has_identity_basis() const noexcept { return basis_ == nullptr; }
  /// Stored basis, or nullptr for the identity.
  const ComplexMatrix* stored_basis() const noexcept { return basis_.get(); }
  /// Materialized basis (allocates the identity when none is stored).
  ComplexMatrix basis() const;

 private:
  RealVector eigenvalues_;
  std::shared_ptr<const ComplexMatrix> basis_;
};

/// Smoothed thermodynamic entropy S(E) = log(density of states) on a uniform
/// grid, with beta(E) = S'(E) from centered differences.
class EntropyModel {
 public:
  /// Tabulated model on a uniform grid; beta is differentiated numerically.
  EntropyModel(std::vector<double> grid, std::vector<double> entropy,
               double smoothing_width);
  /// S(E) = value everywhere on [e_lo, e_hi] (beta = 0).
  static EntropyModel constant(double value, double e_lo, double e_hi);

  double smoothing_width() const noexcept { return width_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& entropy_grid() const noexcept { return entropy_; }
  const std::vector<double>& beta_grid() const noexcept { return beta_; }

  /// Linear interpolation, clamped to the grid ends.
  double entropy(double energy) const noexcept;
  double beta(double energy) const noexcept;
  /// Grid energy at which S is largest.
  double peak_energy() const noexcept;

 private:
  double interpolate(const std::vector<double>& values, double energy) const noexcept;

  std::vector<double> grid_;
  std::vector<double> entropy_;
  std::vector<double> beta_;
  double width_ = 0.0;
};

/// Contiguous block [first, last) of eigenstates with |E_n - center| <= half_width.
struct MicrocanonicalWindow {
  double center = 0.0;
  double half_width = 0.0;
  Index first = 0;
  Index last = 0;

  Index size() const noexcept { return last - first; }
  bool contains(Index n) const noexcept { return n >= first && n < last; }
};

enum class EigenBackend { automatic, lapack, eigen };

std::string to_string(EigenBackend backend);

/// One-time check that the linked BLAS multiplies correctly.
bool lapack_gemm_healthy();

/// automatic -> lapack when lapack_gemm_healthy(), else eigen.
EigenBackend resolve_backend(EigenBackend backend);

/// Dense Hermitian eigendecomposition: LAPACK divide and conquer, or Eigen's
/// self-adjoint solver when the BLAS underneath LAPACK fails its self-check.
/// Real-symmetric inputs take the real path and return a real-valued basis.
EnergySpectrum eigendecompose(const HamiltonianMatrix& h,
                              EigenBackend backend = EigenBackend::automatic);

/// Default kernel width for entropy_model: 2% of the spectral bandwidth.
double default_entropy_width(const EnergySpectrum& spectrum);

/// Gaussian-kernel density of states; rejects widths below 3 bulk spacings.
EntropyModel entropy_model(const EnergySpectrum& spectrum, double smoothing_width);

MicrocanonicalWindow microcanonical_window(const EnergySpectrum& spectrum,
                                           double center, double half_width);

/// Mean of min(s_n, s_{n+1}) / max(s_n, s_{n+1}) over the eigenvalues between
/// the given spectrum fractions. Zero-zero spacing pairs are skipped.
double level_spacing_ratio(const RealVector& eigenvalues, double lo_fraction = 0.25,
                           double hi_fraction = 0.75);

}  // namespace ethlab
