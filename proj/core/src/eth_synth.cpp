#include "ethlab/eth_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ethlab/errors.hpp"
#include "ethlab/rng.hpp"

namespace ethlab {

EnvelopeSpec EnvelopeSpec::exp_decay(double rate, double amplitude) {
  EnvelopeSpec spec;
  spec.form = EnvelopeForm::exp_decay;
  spec.decay_rate = rate;
  spec.amplitude = amplitude;
  return spec;
}

EnvelopeSpec EnvelopeSpec::constant(double amplitude) {
  EnvelopeSpec spec;
  spec.form = EnvelopeForm::constant;
  spec.amplitude = amplitude;
  return spec;
}

namespace {

double table_value(const std::vector<std::pair<double, double>>& table, double omega) {
  if (omega <= table.front().first) return table.front().second;
  if (omega >= table.back().first) return table.back().second;
  const auto it = std::upper_bound(table.begin(), table.end(), omega,
                                   [](double x, const auto& node) { return x < node.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (omega - lo.first) / (hi.first - lo.first);
  return lo.second + t * (hi.second - lo.second);
}

}  // namespace

void EnvelopeSpec::validate() const {
  if (!std::isfinite(amplitude)) throw ValidationError("envelope amplitude must be finite");
  switch (form) {
    case EnvelopeForm::exp_decay:
      if (!(decay_rate >= 0.0) || !std::isfinite(decay_rate)) {
        throw ValidationError("envelope decay rate must be finite and >= 0");
      }
      break;
    case EnvelopeForm::constant:
      break;
    case EnvelopeForm::table: {
      if (table.size() < 2) throw ValidationError("envelope table needs >= 2 nodes");
      for (std::size_t i = 1; i < table.size(); ++i) {
        if (!(table[i].first > table[i - 1].first)) {
          throw ValidationError("envelope table nodes must be strictly increasing in omega");
        }
      }
      // A table that reaches negative omega must mirror itself.
      if (table.front().first < 0.0) {
        for (const auto& [omega, value] : table) {
          const double mirrored = table_value(table, -omega);
          if (std::abs(mirrored - value) > 1e-12 * std::max(1.0, std::abs(value))) {
            throw ValidationError("envelope table is not even in omega");
          }
        }
      }
      break;
    }
  }
}

double EnvelopeSpec::operator()(double omega) const {
  switch (form) {
    case EnvelopeForm::exp_decay: return amplitude * std::exp(-decay_rate * std::abs(omega));
    case EnvelopeForm::constant: return amplitude;
    case EnvelopeForm::table:
      return amplitude * table_value(table, table.front().first < 0.0 ? omega : std::abs(omega));
  }
  return 0.0;
}

EnergySpectrum synth_spectrum(const SynthSpectrumParams& p) {
  if (p.dim < 16) throw ValidationError("synthetic spectrum needs D >= 16");
  if (p.dim > kMaxDenseDim) throw ValidationError("synthetic spectrum exceeds dense limit");
  if (!(p.bandwidth > 0.0)) throw ValidationError("synthetic bandwidth must be > 0");
  RealVector e(p.dim);
  for (Index i = 0; i < p.dim; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    switch (p.shape) {
      case DosShape::flat:
        e(i) = p.bandwidth * rng::uniform(p.seed, rng::Stream::spectrum, u);
        break;
      case DosShape::gaussian:
        e(i) = 0.5 * p.bandwidth +
               (p.bandwidth / 6.0) * rng::normal_pair(p.seed, rng::Stream::spectrum, u).first;
        break;
      case DosShape::semicircle: {
        // Projection of a uniform point in the unit disk.
        const double r = std::sqrt(rng::uniform(p.seed, rng::Stream::spectrum, u, 0, 0));
        const double phi = 2.0 * std::numbers::pi * rng::uniform(p.seed, rng::Stream::spectrum, u, 0, 1);
        e(i) = 0.5 * p.bandwidth * (1.0 + r * std::cos(phi));
        break;
      }
    }
  }
  std::sort(e.begin(), e.end());
  return EnergySpectrum(std::move(e));
}

SynthEthOperator synth_eth_operator(const EnergySpectrum& spectrum, const EntropyModel& entropy,
                                    const EnvelopeSpec& envelope,
                                    const DiagonalProfileFn& diagonal, std::uint64_t seed,
                                    std::string diagonal_label) {
  envelope.validate();
  if (!diagonal) throw ValidationError("diagonal profile function is empty");
  const Index d = spectrum.dim();
  const RealVector& e = spectrum.eigenvalues();
  ComplexMatrix a(d, d);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (Index n = 0; n < d; ++n) {
    for (Index m = 0; m < n; ++m) {
      const double mean_energy = 0.5 * (e(m) + e(n));
      const double omega = e(m) - e(n);
      const double scale = std::exp(-0.5 * entropy.entropy(mean_energy)) * envelope(omega);
      const auto [re, im] = rng::normal_pair(seed, rng::Stream::off_diagonal,
                                             static_cast<std::uint64_t>(m),
                                             static_cast<std::uint64_t>(n));
      const std::complex<double> value(scale * re * inv_sqrt2, scale * im * inv_sqrt2);
      a(m, n) = value;
      a(n, m) = std::conj(value);
    }
    const double z = rng::normal_pair(seed, rng::Stream::diagonal, static_cast<std::uint64_t>(n)).first;
    const double scale = std::exp(-0.5 * entropy.entropy(e(n))) * envelope(0.0);
    a(n, n) = diagonal(e(n)) + scale * z;
  }
  SynthProvenance provenance;
  provenance.envelope = envelope;
  provenance.diagonal_profile = std::move(diagonal_label);
  provenance.seed = seed;
  return SynthEthOperator{OperatorEigenbasis(std::move(a)), std::move(provenance)};
}

}  // namespace ethlab
