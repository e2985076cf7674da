#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ethlab/model_lab.hpp"
#include "ethlab/spectral_core.hpp"

namespace ethlab {

enum class DosShape { gaussian, semicircle, flat };

/// Synthetic spectra live on the band [0, bandwidth]: flat is uniform there,
/// semicircle has that support, gaussian has mean bandwidth/2 and standard
/// deviation bandwidth/6.
struct SynthSpectrumParams {
  Index dim = 1024;
  DosShape shape = DosShape::flat;
  double bandwidth = 1.0;
  std::uint64_t seed = 0;
};

enum class EnvelopeForm { exp_decay, constant, table };

/// Spectral envelope f(omega), independent of the mean energy.
///
/// exp_decay: f = amplitude * exp(-decay_rate |omega|); constant: f = amplitude;
/// table: piecewise-linear in omega through (omega, f) nodes, flat outside.
struct EnvelopeSpec {
  EnvelopeForm form = EnvelopeForm::exp_decay;
  double decay_rate = 0.0;
  double amplitude = 1.0;
  std::vector<std::pair<double, double>> table;

  static EnvelopeSpec exp_decay(double rate, double amplitude = 1.0);
  static EnvelopeSpec constant(double amplitude = 1.0);

  /// Throws ValidationError for negative rates or tables that are not even.
  void validate() const;
  double operator()(double omega) const;
};

using DiagonalProfileFn = std::function<double(double)>;

struct SynthProvenance {
  std::optional<SynthSpectrumParams> spectrum;
  EnvelopeSpec envelope;
  std::string diagonal_profile;
  std::uint64_t seed = 0;
};

struct SynthEthOperator {
  OperatorEigenbasis matrix;
  SynthProvenance provenance;
};

EnergySpectrum synth_spectrum(const SynthSpectrumParams& params);

/// Draws A_mn = O(E_n) delta_mn + exp(-S(Ebar)/2) f(omega) R_mn with
/// Ebar = (E_m + E_n)/2 and omega = E_m - E_n. Off-diagonal R is complex
/// Gaussian with variance 1/2 per component, keyed on (seed, m, n) for m < n
/// and mirrored as the conjugate; diagonal R is real with unit variance.
SynthEthOperator synth_eth_operator(const EnergySpectrum& spectrum, const EntropyModel& entropy,
                                    const EnvelopeSpec& envelope,
                                    const DiagonalProfileFn& diagonal, std::uint64_t seed,
                                    std::string diagonal_label = "custom");

}  // namespace ethlab
