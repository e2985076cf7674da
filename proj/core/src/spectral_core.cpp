#include "ethlab/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "ethlab/errors.hpp"

namespace ethlab {

HermitianMatrix::HermitianMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw ValidationError("Hermitian matrix must be square and nonempty, got " +
                          std::to_string(entries_.rows()) + "x" +
                          std::to_string(entries_.cols()));
  }
  const double norm = entries_.norm();
  double deviation2 = 0.0;
  const Index n = entries_.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      deviation2 += (i == j ? 1.0 : 2.0) *
                    std::norm(entries_(i, j) - std::conj(entries_(j, i)));
    }
  }
  if (std::sqrt(deviation2) > kHermitianTolerance * norm) {
    throw ValidationError("matrix is not Hermitian: relative deviation " +
                          std::to_string(std::sqrt(deviation2) / norm));
  }
  real_ = entries_.imag().isZero(0.0);
}

EnergySpectrum::EnergySpectrum(RealVector eigenvalues, ComplexMatrix basis)
    : eigenvalues_(std::move(eigenvalues)),
      basis_(std::make_shared<const ComplexMatrix>(std::move(basis))) {
  if (basis_->rows() != eigenvalues_.size() || basis_->cols() != eigenvalues_.size()) {
    throw ValidationError("spectrum basis shape does not match eigenvalue count");
  }
  if (!std::is_sorted(eigenvalues_.begin(), eigenvalues_.end())) {
    throw ValidationError("eigenvalues must be sorted ascending");
  }
}

EnergySpectrum::EnergySpectrum(RealVector eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() == 0) throw ValidationError("empty spectrum");
  if (!std::is_sorted(eigenvalues_.begin(), eigenvalues_.end())) {
    throw ValidationError("eigenvalues must be sorted ascending");
  }
}

double EnergySpectrum::bandwidth() const noexcept {
  return eigenvalues_(dim() - 1) - eigenvalues_(0);
}

double EnergySpectrum::bulk_level_spacing() const {
  const Index d = dim();
  if (d < 2) throw ValidationError("level spacing needs at least two levels");
  auto lo = static_cast<Index>(std::floor(0.2 * static_cast<double>(d)));
  auto hi = static_cast<Index>(std::floor(0.8 * static_cast<double>(d)));
  hi = std::min(hi, d - 1);
  if (hi <= lo) {
    lo = 0;
    hi = d - 1;
  }
  return (eigenvalues_(hi) - eigenvalues_(lo)) / static_cast<double>(hi - lo);
}

ComplexMatrix EnergySpectrum::basis() const {
  if (basis_) return *basis_;
  return ComplexMatrix::Identity(dim(), dim());
}

namespace {

extern "C" {
void dgemm_(const char* ta, const char* tb, const int* m, const int* n, const int* k, const double* alpha,
            const double* a, const int* lda, const double* b, const int* ldb, const double* beta, double* c,
            const int* ldc);
void zgemm_(const char* ta, const char* tb, const int* m, const int* n, const int* k,
            const std::complex<double>* alpha, const std::complex<double>* a, const int* lda,
            const std::complex<double>* b, const int* ldb, const std::complex<double>* beta,
            std::complex<double>* c, const int* ldc);
}

// Some OpenBLAS builds pick a gemm kernel that returns wrong results on CPUs
// newer than the build knows about; the eigensolvers inherit the damage.
bool check_gemm() {
  const int n = 256;
  RealMatrix a(n, n), b(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      a(i, j) = std::sin(0.37 * i + 1.3 * j + 0.1);
      b(i, j) = std::cos(0.91 * i - 0.17 * j + 0.2);
    }
  }
  const RealMatrix ref = a.lazyProduct(b);
  RealMatrix c = RealMatrix::Zero(n, n);
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero, c.data(), &n);
  if (!((c - ref).norm() <= 1e-11 * ref.norm())) return false;

  const ComplexMatrix za = a.cast<std::complex<double>>() * std::complex<double>(0.6, 0.8);
  const ComplexMatrix zb = b.cast<std::complex<double>>();
  const ComplexMatrix zref = za.lazyProduct(zb);
  ComplexMatrix zc = ComplexMatrix::Zero(n, n);
  const std::complex<double> zone = 1.0, zzero = 0.0;
  zgemm_("N", "N", &n, &n, &n, &zone, za.data(), &n, zb.data(), &n, &zzero, zc.data(), &n);
  return (zc - zref).norm() <= 1e-11 * zref.norm();
}

template <class Matrix>
EnergySpectrum eigen_solve(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericError("Eigen self-adjoint solver did not converge");
  return EnergySpectrum(es.eigenvalues(), es.eigenvectors().template cast<std::complex<double>>());
}

}  // namespace

bool lapack_gemm_healthy() {
  static const bool healthy = check_gemm();
  return healthy;
}

EigenBackend resolve_backend(EigenBackend backend) {
  if (backend != EigenBackend::automatic) return backend;
  return lapack_gemm_healthy() ? EigenBackend::lapack : EigenBackend::eigen;
}

std::string to_string(EigenBackend backend) {
  switch (backend) {
    case EigenBackend::automatic: return "automatic";
    case EigenBackend::lapack: return "lapack";
    case EigenBackend::eigen: return "eigen";
  }
  return "unknown";
}

EnergySpectrum eigendecompose(const HamiltonianMatrix& h, EigenBackend backend) {
  const Index n = h.dim();
  if (n > kMaxDenseDim) {
    throw ValidationError("dimension " + std::to_string(n) + " exceeds dense limit " +
                          std::to_string(kMaxDenseDim));
  }
  if (resolve_backend(backend) == EigenBackend::eigen) {
    if (h.is_real()) return eigen_solve<RealMatrix>(h.entries().real());
    return eigen_solve<ComplexMatrix>(h.entries());
  }
  if (!lapack_gemm_healthy()) {
    throw NumericError("LAPACK backend refused: the BLAS gemm self-check failed "
                       "(for OpenBLAS, try OPENBLAS_CORETYPE=Haswell)");
  }
  const auto ln = static_cast<lapack_int>(n);
  RealVector w(n);
  if (h.is_real()) {
    RealMatrix a = h.entries().real();
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', ln, a.data(), ln, w.data());
    if (info != 0) {
      throw NumericError("dsyevd failed with info = " + std::to_string(info));
    }
    return EnergySpectrum(std::move(w), a.cast<std::complex<double>>());
  }
  ComplexMatrix a = h.entries();
  const lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', ln, a.data(), ln, w.data());
  if (info != 0) {
    throw NumericError("zheevd failed with info = " + std::to_string(info));
  }
  return EnergySpectrum(std::move(w), std::move(a));
}

// --- EntropyModel -----------------------------------------------------------

EntropyModel::EntropyModel(std::vector<double> grid, std::vector<double> entropy,
                           double smoothing_width)
    : grid_(std::move(grid)), entropy_(std::move(entropy)), width_(smoothing_width) {
  if (grid_.size() < 2 || grid_.size() != entropy_.size()) {
    throw ValidationError("entropy grid needs >= 2 points and matching values");
  }
  const std::size_t m = grid_.size();
  beta_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == m ? m - 1 : i + 1;
    beta_[i] = (entropy_[hi] - entropy_[lo]) / (grid_[hi] - grid_[lo]);
  }
}

EntropyModel EntropyModel::constant(double value, double e_lo, double e_hi) {
  if (!(e_hi > e_lo)) throw ValidationError("constant entropy needs e_hi > e_lo");
  return EntropyModel({e_lo, e_hi}, {value, value}, 0.0);
}

double EntropyModel::interpolate(const std::vector<double>& values,
                                 double energy) const noexcept {
  if (energy <= grid_.front()) return values.front();
  if (energy >= grid_.back()) return values.back();
  const double step = (grid_.back() - grid_.front()) / static_cast<double>(grid_.size() - 1);
  auto i = static_cast<std::size_t>((energy - grid_.front()) / step);
  i = std::min(i, grid_.size() - 2);
  const double t = (energy - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return values[i] + t * (values[i + 1] - values[i]);
}

double EntropyModel::entropy(double energy) const noexcept { return interpolate(entropy_, energy); }

double EntropyModel::beta(double energy) const noexcept { return interpolate(beta_, energy); }

double EntropyModel::peak_energy() const noexcept {
  const auto it = std::max_element(entropy_.begin(), entropy_.end());
  return grid_[static_cast<std::size_t>(it - entropy_.begin())];
}

double default_entropy_width(const EnergySpectrum& spectrum) {
  return 0.02 * spectrum.bandwidth();
}

EntropyModel entropy_model(const EnergySpectrum& spectrum, double smoothing_width) {
  if (!(smoothing_width > 0.0)) throw ValidationError("entropy smoothing width must be > 0");
  const double spacing = spectrum.bulk_level_spacing();
  if (smoothing_width < 3.0 * spacing) {
    throw ValidationError("entropy smoothing width " + std::to_string(smoothing_width) +
                          " is below 3 bulk level spacings (" +
                          std::to_string(3.0 * spacing) + ")");
  }
  const RealVector& e = spectrum.eigenvalues();
  const double lo = e(0);
  const double hi = e(e.size() - 1);
  const double step_target = smoothing_width / 8.0;
  std::size_t points = 201;
  if (hi > lo) {
    points = std::max<std::size_t>(
        points, static_cast<std::size_t>(std::ceil((hi - lo) / step_target)) + 1);
  }
  points = std::min<std::size_t>(points, 20001);
  const double step = hi > lo ? (hi - lo) / static_cast<double>(points - 1) : 0.0;

  std::vector<double> grid(points);
  std::vector<double> entropy(points);
  const double cutoff = 9.0 * smoothing_width;
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * smoothing_width);
  for (std::size_t g = 0; g < points; ++g) {
    const double x = lo + step * static_cast<double>(g);
    grid[g] = x;
    const auto* first = std::lower_bound(e.data(), e.data() + e.size(), x - cutoff);
    const auto* last = std::upper_bound(e.data(), e.data() + e.size(), x + cutoff);
    double density = 0.0;
    for (const double* it = first; it != last; ++it) {
      const double u = (x - *it) / smoothing_width;
      density += std::exp(-0.5 * u * u);
    }
    entropy[g] = std::log(density * norm);
  }
  if (!(hi > lo)) {
    grid[points - 1] = lo + smoothing_width;
  }
  return EntropyModel(std::move(grid), std::move(entropy), smoothing_width);
}

MicrocanonicalWindow microcanonical_window(const EnergySpectrum& spectrum, double center,
                                           double half_width) {
  if (!(half_width > 0.0)) throw ValidationError("window half-width must be > 0");
  const RealVector& e = spectrum.eigenvalues();
  const auto* begin = e.data();
  const auto* end = e.data() + e.size();
  const auto* first = std::lower_bound(begin, end, center - half_width);
  const auto* last = std::upper_bound(begin, end, center + half_width);
  if (first >= last) {
    throw EmptyWindowError("no eigenvalues in [" + std::to_string(center - half_width) + ", " +
                           std::to_string(center + half_width) + "]");
  }
  return MicrocanonicalWindow{center, half_width, static_cast<Index>(first - begin),
                              static_cast<Index>(last - begin)};
}

double level_spacing_ratio(const RealVector& eigenvalues, double lo_fraction,
                           double hi_fraction) {
  const Index d = eigenvalues.size();
  const auto lo = static_cast<Index>(std::floor(lo_fraction * static_cast<double>(d)));
  const auto hi = std::min<Index>(d, static_cast<Index>(std::ceil(hi_fraction * static_cast<double>(d))));
  if (hi - lo < 3) throw ValidationError("level spacing ratio needs at least 3 levels");
  double sum = 0.0;
  std::size_t count = 0;
  for (Index n = lo; n + 2 < hi; ++n) {
    const double s0 = eigenvalues(n + 1) - eigenvalues(n);
    const double s1 = eigenvalues(n + 2) - eigenvalues(n + 1);
    const double larger = std::max(s0, s1);
    if (larger <= 0.0) continue;
    sum += std::min(s0, s1) / larger;
    ++count;
  }
  if (count == 0) throw ValidationError("spectrum is fully degenerate");
  return sum / static_cast<double>(count);
}

}  // namespace ethlab
