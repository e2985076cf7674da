#include "ethlab/eth_extract.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "ethlab/errors.hpp"

namespace ethlab {

namespace {

double interpolate_clamped(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + t * (y[i] - y[i - 1]);
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

double DiagonalProfile::at(double energy) const {
  return interpolate_clamped(energies, values, energy);
}

DiagonalProfile diagonal_profile(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                 double bandwidth, std::size_t grid_points) {
  if (a.dim() != spectrum.dim()) throw ValidationError("operator/spectrum dimension mismatch");
  if (grid_points < 2) throw ValidationError("diagonal profile needs >= 2 grid points");
  const double spacing = spectrum.bulk_level_spacing();
  if (!(bandwidth >= 3.0 * spacing) || !(bandwidth > 0.0)) {
    throw ValidationError("diagonal profile bandwidth " + std::to_string(bandwidth) +
                          " is below 3 bulk level spacings (" + std::to_string(3.0 * spacing) + ")");
  }
  const RealVector& e = spectrum.eigenvalues();
  const Index d = spectrum.dim();
  const double* begin = e.data();
  const double* end = e.data() + d;
  const double cutoff = 6.0 * bandwidth;

  // Nadaraya-Watson smoother of `y` evaluated at `x`.
  auto smooth = [&](const RealVector& y, double x) {
    const double* lo = std::lower_bound(begin, end, x - cutoff);
    const double* hi = std::upper_bound(begin, end, x + cutoff);
    double num = 0.0;
    double den = 0.0;
    for (const double* it = lo; it != hi; ++it) {
      const double u = (x - *it) / bandwidth;
      const double w = std::exp(-0.5 * u * u);
      num += w * y(it - begin);
      den += w;
    }
    return den > 0.0 ? num / den : std::nan("");
  };

  RealVector diag = a.entries().diagonal().real();
  RealVector residual2(d);
  for (Index n = 0; n < d; ++n) {
    const double r = diag(n) - smooth(diag, e(n));
    residual2(n) = r * r;
  }

  DiagonalProfile profile;
  profile.bandwidth = bandwidth;
  profile.energies.resize(grid_points);
  profile.values.resize(grid_points);
  profile.scatter.resize(grid_points);
  const double lo = e(0);
  const double hi = e(d - 1);
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    profile.energies[g] = x;
    profile.values[g] = smooth(diag, x);
    profile.scatter[g] = std::sqrt(smooth(residual2, x));
  }
  return profile;
}

EnvelopeBinning default_binning(const EnergySpectrum& spectrum, double slice_fraction,
                                double omega_fraction, std::size_t omega_bins) {
  if (omega_bins == 0) throw ValidationError("need at least one omega bin");
  const double width = spectrum.bandwidth();
  const Index d = spectrum.dim();
  const double center = spectrum.energy(d / 2);
  EnvelopeBinning binning;
  binning.energy_edges = {center - slice_fraction * width, center + slice_fraction * width};
  binning.omega_max = omega_fraction * width;
  binning.omega_bin_width = binning.omega_max / static_cast<double>(omega_bins);
  return binning;
}

EnvelopeModel::EnvelopeModel(EnvelopeBinning binning, std::vector<EnvelopeBin> bins,
                             std::vector<SliceFit> fits)
    : binning_(std::move(binning)), bins_(std::move(bins)), fits_(std::move(fits)) {
  const std::size_t slices = binning_.energy_edges.size() - 1;
  omega_bins_ = slices == 0 ? 0 : bins_.size() / slices;
}

const EnvelopeBin& EnvelopeModel::bin(std::size_t slice, std::size_t omega_index) const {
  return bins_.at(slice * omega_bins_ + omega_index);
}

std::optional<double> EnvelopeModel::f2_at(double mean_energy, double omega) const {
  const auto& edges = binning_.energy_edges;
  if (mean_energy < edges.front() || mean_energy >= edges.back()) return std::nullopt;
  const auto slice =
      static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), mean_energy) - edges.begin()) - 1;
  const double w = std::abs(omega);
  if (w >= binning_.omega_max) return std::nullopt;
  const auto k = std::min(static_cast<std::size_t>(w / binning_.omega_bin_width), omega_bins_ - 1);
  const EnvelopeBin& b = bin(slice, k);
  if (!b.usable || !(b.f2 > 0.0)) return std::nullopt;
  return b.f2;
}

std::optional<double> EnvelopeModel::decay_rate() const {
  for (const auto& fit : fits_) {
    if (fit.decay_rate) return fit.decay_rate;
  }
  return std::nullopt;
}

void EnvelopeModel::write_csv(std::ostream& out) const {
  out << "E_center,omega_center,f2,count\n";
  for (const auto& b : bins_) {
    if (!b.usable) continue;
    out << format_double(b.energy_center) << ',' << format_double(b.omega_center) << ','
        << format_double(b.f2) << ',' << b.count << '\n';
  }
}

EnvelopeModel envelope_estimate(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                const EntropyModel& entropy, const EnvelopeBinning& binning) {
  if (a.dim() != spectrum.dim()) throw ValidationError("operator/spectrum dimension mismatch");
  const auto& edges = binning.energy_edges;
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      !(edges.back() > edges.front())) {
    throw ValidationError("envelope binning needs >= 2 ascending energy edges");
  }
  if (!(binning.omega_bin_width > 0.0) || !(binning.omega_max > 0.0)) {
    throw ValidationError("envelope omega binning must be positive");
  }
  const std::size_t slices = edges.size() - 1;
  const auto omega_bins = static_cast<std::size_t>(
      std::ceil(binning.omega_max / binning.omega_bin_width - 1e-9));
  std::vector<double> sums(slices * omega_bins, 0.0);
  std::vector<std::size_t> counts(slices * omega_bins, 0);

  const RealVector& e = spectrum.eigenvalues();
  const Index d = spectrum.dim();
  const ComplexMatrix& m = a.entries();
  for (Index n = 1; n < d; ++n) {
    for (Index k = 0; k < n; ++k) {
      const double mean_energy = 0.5 * (e(k) + e(n));
      if (mean_energy < edges.front() || mean_energy >= edges.back()) continue;
      const double omega = e(n) - e(k);
      if (omega >= binning.omega_max) continue;
      const auto slice = static_cast<std::size_t>(
          std::upper_bound(edges.begin(), edges.end(), mean_energy) - edges.begin()) - 1;
      const auto w = std::min(static_cast<std::size_t>(omega / binning.omega_bin_width), omega_bins - 1);
      const std::size_t idx = slice * omega_bins + w;
      sums[idx] += std::exp(entropy.entropy(mean_energy)) * std::norm(m(k, n));
      ++counts[idx];
    }
  }

  std::vector<EnvelopeBin> bins(slices * omega_bins);
  for (std::size_t s = 0; s < slices; ++s) {
    for (std::size_t w = 0; w < omega_bins; ++w) {
      EnvelopeBin& b = bins[s * omega_bins + w];
      const std::size_t idx = s * omega_bins + w;
      b.energy_center = 0.5 * (edges[s] + edges[s + 1]);
      b.omega_center = (static_cast<double>(w) + 0.5) * binning.omega_bin_width;
      b.count = counts[idx];
      b.f2 = counts[idx] > 0 ? sums[idx] / static_cast<double>(counts[idx]) : 0.0;
      b.usable = counts[idx] >= binning.min_count;
    }
  }

  const double default_lo = 4.0 * spectrum.bulk_level_spacing();
  std::vector<SliceFit> fits(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    SliceFit& fit = fits[s];
    fit.energy_center = 0.5 * (edges[s] + edges[s + 1]);
    double last_usable = 0.0;
    for (std::size_t w = 0; w < omega_bins; ++w) {
      const EnvelopeBin& b = bins[s * omega_bins + w];
      if (b.usable && b.f2 > 0.0) last_usable = b.omega_center;
    }
    fit.fit_omega_min = binning.fit_omega_min.value_or(default_lo);
    fit.fit_omega_max = binning.fit_omega_max.value_or(last_usable);

    double sw = 0.0, sx = 0.0, sy = 0.0;
    std::vector<const EnvelopeBin*> used;
    for (std::size_t w = 0; w < omega_bins; ++w) {
      const EnvelopeBin& b = bins[s * omega_bins + w];
      if (!b.usable || !(b.f2 > 0.0)) continue;
      if (b.omega_center < fit.fit_omega_min || b.omega_center > fit.fit_omega_max) continue;
      used.push_back(&b);
      const auto weight = static_cast<double>(b.count);
      sw += weight;
      sx += weight * b.omega_center;
      sy += weight * std::log(b.f2);
    }
    fit.bins_used = used.size();
    if (used.size() < 4) continue;
    const double xbar = sx / sw;
    const double ybar = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const EnvelopeBin* b : used) {
      const auto weight = static_cast<double>(b->count);
      sxx += weight * (b->omega_center - xbar) * (b->omega_center - xbar);
      sxy += weight * (b->omega_center - xbar) * (std::log(b->f2) - ybar);
    }
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (const EnvelopeBin* b : used) {
      const double r = std::log(b->f2) - (ybar + slope * (b->omega_center - xbar));
      ssr += static_cast<double>(b->count) * r * r;
    }
    const auto dof = static_cast<double>(used.size() - 2);
    fit.decay_rate = -0.5 * slope;
    fit.standard_error = 0.5 * std::sqrt(ssr / dof / sxx);
    fit.residual = std::sqrt(ssr / sw);
  }
  return EnvelopeModel(binning, std::move(bins), std::move(fits));
}

GaussianityStats gaussianity_stats(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                   const EntropyModel& entropy, const EnvelopeModel& envelope,
                                   const MicrocanonicalWindow& window) {
  if (a.dim() != spectrum.dim()) throw ValidationError("operator/spectrum dimension mismatch");
  if (window.last > spectrum.dim() || window.size() < 2) {
    throw ValidationError("window must hold at least two valid eigenstates");
  }
  const ComplexMatrix& m = a.entries();
  const RealVector& e = spectrum.eigenvalues();
  bool real_block = true;
  for (Index n = window.first; n < window.last && real_block; ++n) {
    for (Index k = window.first; k < n; ++k) {
      if (m(k, n).imag() != 0.0) {
        real_block = false;
        break;
      }
    }
  }

  std::vector<double> samples;
  for (Index n = window.first; n < window.last; ++n) {
    for (Index k = window.first; k < n; ++k) {
      const double mean_energy = 0.5 * (e(k) + e(n));
      const auto f2 = envelope.f2_at(mean_energy, e(n) - e(k));
      if (!f2) continue;
      const double scale = std::exp(0.5 * entropy.entropy(mean_energy)) / std::sqrt(*f2);
      if (real_block) {
        samples.push_back(scale * m(k, n).real());
      } else {
        samples.push_back(std::numbers::sqrt2 * scale * m(k, n).real());
        samples.push_back(std::numbers::sqrt2 * scale * m(k, n).imag());
      }
    }
  }
  if (samples.empty()) {
    throw ValidationError("no off-diagonal sample with an envelope estimate in the window");
  }

  GaussianityStats stats;
  stats.samples = samples.size();
  const auto count = static_cast<double>(samples.size());
  double mean = 0.0;
  for (const double x : samples) mean += x;
  mean /= count;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const double x : samples) {
    const double c = x - mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= count;
  m3 /= count;
  m4 /= count;
  stats.mean = mean;
  stats.variance = m2;
  stats.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  stats.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  stats.mean_standard_error = std::sqrt(m2 / count);
  stats.low_power = samples.size() < 1000;
  return stats;
}

}  // namespace ethlab
