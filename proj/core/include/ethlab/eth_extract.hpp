#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "ethlab/model_lab.hpp"
#include "ethlab/spectral_core.hpp"

namespace ethlab {

/// Kernel-smoothed regression of A_nn against E_n.
struct DiagonalProfile {
  double bandwidth = 0.0;
  std::vector<double> energies;
  std::vector<double> values;
  /// Kernel-weighted RMS of A_nn - O(E_n) around each grid point.
  std::vector<double> scatter;

  /// Linear interpolation of the profile, clamped at the grid ends.
  double at(double energy) const;
};

DiagonalProfile diagonal_profile(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                 double bandwidth, std::size_t grid_points = 101);

/// 2-D binning over mean energy and |omega|.
struct EnvelopeBinning {
  /// Mean-energy slice edges (ascending, at least two).
  std::vector<double> energy_edges;
  double omega_bin_width = 0.1;
  double omega_max = 1.0;
  std::size_t min_count = 50;
  /// Fit window; defaults are 4 bulk level spacings and the last populated bin.
  std::optional<double> fit_omega_min;
  std::optional<double> fit_omega_max;
};

/// One central mean-energy slice of half-width `slice_fraction * bandwidth`
/// and omega bins up to `omega_fraction * bandwidth`.
EnvelopeBinning default_binning(const EnergySpectrum& spectrum, double slice_fraction = 0.05,
                                double omega_fraction = 0.5, std::size_t omega_bins = 40);

struct EnvelopeBin {
  double energy_center = 0.0;
  double omega_center = 0.0;
  /// e^{S(Ebar)} |A_mn|^2 averaged over the pairs in the bin.
  double f2 = 0.0;
  std::size_t count = 0;
  /// Bin has at least min_count pairs.
  bool usable = false;
};

struct SliceFit {
  double energy_center = 0.0;
  /// Decay rate of f, gamma_hat = -slope/2 of log|f|^2 against |omega|.
  std::optional<double> decay_rate;
  double standard_error = 0.0;
  /// Count-weighted RMS residual of the log fit.
  double residual = 0.0;
  double fit_omega_min = 0.0;
  double fit_omega_max = 0.0;
  std::size_t bins_used = 0;
};

/// Binned |f|^2 over (Ebar, |omega|) with a per-slice exponential fit.
class EnvelopeModel {
 public:
  EnvelopeModel(EnvelopeBinning binning, std::vector<EnvelopeBin> bins, std::vector<SliceFit> fits);

  const EnvelopeBinning& binning() const noexcept { return binning_; }
  std::size_t energy_slices() const noexcept { return binning_.energy_edges.size() - 1; }
  std::size_t omega_bins() const noexcept { return omega_bins_; }
  /// Bin (slice, omega_index), row-major by slice.
  const EnvelopeBin& bin(std::size_t slice, std::size_t omega_index) const;
  const std::vector<EnvelopeBin>& bins() const noexcept { return bins_; }
  const std::vector<SliceFit>& fits() const noexcept { return fits_; }

  /// |f|^2 of the usable bin containing (mean_energy, |omega|), if any.
  std::optional<double> f2_at(double mean_energy, double omega) const;
  /// First available slice decay rate, if any.
  std::optional<double> decay_rate() const;

  /// CSV with columns E_center,omega_center,f2,count (usable bins only).
  void write_csv(std::ostream& out) const;

 private:
  EnvelopeBinning binning_;
  std::size_t omega_bins_ = 0;
  std::vector<EnvelopeBin> bins_;
  std::vector<SliceFit> fits_;
};

/// Uses one entry per unordered off-diagonal pair m < n.
EnvelopeModel envelope_estimate(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                const EntropyModel& entropy, const EnvelopeBinning& binning);

struct GaussianityStats {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::size_t samples = 0;
  /// Standard error of the sample mean.
  double mean_standard_error = 0.0;
  /// Fewer than 1000 samples.
  bool low_power = false;
};

/// Moments of R_hat = A_mn e^{S/2} / f_hat over window pairs m < n. Real
/// blocks contribute Re R_hat; complex blocks contribute sqrt(2) Re and
/// sqrt(2) Im so every sample has unit variance under the ansatz.
GaussianityStats gaussianity_stats(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                   const EntropyModel& entropy, const EnvelopeModel& envelope,
                                   const MicrocanonicalWindow& window);

}  // namespace ethlab
