#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ethlab/eth_extract.hpp"
#include "ethlab/model_lab.hpp"
#include "ethlab/spectral_core.hpp"

namespace ethlab {

using ComplexVector = Eigen::VectorXcd;

/// Gibbs weights p_n = e^{-beta E_n} / Z, stabilized by subtracting the
/// largest log-weight before exponentiating.
struct ThermalState {
  double beta = 0.0;
  double log_partition = 0.0;
  RealVector log_weights;  ///< log p_n (normalized)
  RealVector weights;      ///< p_n

  /// <H>_beta.
  double mean_energy(const EnergySpectrum& spectrum) const;
  /// p_n^exponent, elementwise.
  RealVector power(double exponent) const;
};

ThermalState thermal_state(const EnergySpectrum& spectrum, double beta);

enum class CorrelatorKind { f2, fsym, resp, otoc };

std::string to_string(CorrelatorKind kind);

struct CorrelatorSeries {
  CorrelatorKind kind = CorrelatorKind::f2;
  std::vector<double> times;
  std::vector<std::complex<double>> values;
  double beta = 0.0;
  /// Power of rho per insertion: 1/2 for F2, 1/4 for the OTOC, 0 otherwise.
  double regulator_exponent = 0.0;

  /// CSV with columns t,re,im.
  void write_csv(std::ostream& out) const;
};

/// `count` evenly spaced points from start to stop inclusive.
std::vector<double> uniform_grid(double start, double stop, std::size_t count);

/// F_2(t) = Tr[rho^{1/2} A(t) rho^{1/2} A] by Lehmann contraction.
CorrelatorSeries two_point(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                           double beta, const std::vector<double>& times);

/// F(t) = 1/2 <{A(t), A}> - <A>^2 and rho(t) = <[A(t), A]>.
std::pair<CorrelatorSeries, CorrelatorSeries> symmetric_and_response(
    const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta,
    const std::vector<double>& times);

struct OtocOptions {
  Index max_dim = 4096;
};

/// F_OTO(t) = Tr[rho^{1/4} A(t) rho^{1/4} A rho^{1/4} A(t) rho^{1/4} A], one
/// dense product per time point. Throws CostGuardError above max_dim.
CorrelatorSeries otoc(const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta,
                      const std::vector<double>& times, const OtocOptions& options = {});

/// One Lehmann delta peak: F_tilde and rho_tilde weights at `frequency`.
struct LehmannPeak {
  double frequency = 0.0;
  double fluctuation = 0.0;
  double response = 0.0;
};

/// All peaks of F_tilde and rho_tilde before broadening (D^2 entries; the
/// diagonal and the connected subtraction are merged into one peak at 0).
std::vector<LehmannPeak> lehmann_peaks(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                       double beta);

struct SpectralDensity {
  std::vector<double> omega;
  std::vector<double> fluctuation;  ///< F_tilde(omega)
  std::vector<double> response;     ///< rho_tilde(omega)
  double sigma = 0.0;
  double beta = 0.0;

  /// CSV with columns omega,F,rho.
  void write_csv(std::ostream& out) const;
};

/// Transition-frequency spacing used to validate sigma: grid span divided by
/// the number of ordered pairs m != n whose E_n - E_m lies on the grid.
double transition_spacing(const EnergySpectrum& spectrum, double omega_lo, double omega_hi);

/// Fourier transforms (1/2pi) int dt e^{i omega t} of F(t) and rho(t) with
/// each delta replaced by a unit-mass Gaussian of width sigma.
SpectralDensity spectral_densities(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                   double beta, double sigma, const std::vector<double>& omega_grid);

/// Prefactor c in F_tilde = c coth(beta omega / 2) rho_tilde.
/// kubo (c = 1/2) is exact for the F(t) and rho(t) defined above;
/// as_stated (c = 2) is the printed form of the relation.
enum class FdtRelation { kubo, as_stated };

double fdt_prefactor(FdtRelation relation);

struct FdtResult {
  double max_deviation = 0.0;
  std::size_t admissible_points = 0;
  bool beta_zero = false;
  bool empty = false;
  FdtRelation relation = FdtRelation::kubo;
};

/// max |F - c coth(beta w/2) rho| / F over grid points with
/// |rho| >= threshold * max|rho| and |w| >= 4 sigma.
FdtResult fdt_check(const SpectralDensity& sd, double threshold,
                    FdtRelation relation = FdtRelation::kubo);

/// Peak-by-peak deviation of the same relation before broadening (omega != 0).
double fdt_peak_deviation(const std::vector<LehmannPeak>& peaks, double beta,
                          FdtRelation relation = FdtRelation::kubo);

/// Sum_n p_n |A_nn|^2, the long-time plateau of F_2 for a nondegenerate spectrum.
double two_point_plateau(const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta);

/// First time at which |F2(t) - plateau| / |F2(0) - plateau| drops to 1/e.
std::optional<double> dissipation_time(const CorrelatorSeries& f2, double plateau);

enum class FitReliability { high, moderate, low };

std::string to_string(FitReliability reliability);

struct LyapunovFit {
  double rate = 0.0;
  double scrambling_time = 0.0;
  double dissipation_time = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual_norm = 0.0;
  double epsilon_reg = 0.0;
  std::size_t points = 0;
  /// high: t_s/t_d >= 10, moderate: >= 3, low: otherwise.
  FitReliability reliability = FitReliability::low;
};

/// Regression of log(1 - f(t)) on t over [window_lo, window_hi] with
/// f(t) = Re F_OTO(t) / (f2_zero^2 + epsilon_reg). The dissipation time
/// defaults to the start of the time grid.
LyapunovFit fit_lyapunov(const CorrelatorSeries& otoc_series, double f2_zero, double epsilon_reg,
                         double window_lo, double window_hi,
                         std::optional<double> dissipation_time = std::nullopt);

class PureStateCoefficients {
 public:
  static constexpr double kNormTolerance = 1e-10;

  explicit PureStateCoefficients(ComplexVector coefficients);

  /// c_n proportional to exp(-(E_n - center)^2 / (4 width^2)) with seeded
  /// random phases, normalized.
  static PureStateCoefficients gaussian_packet(const EnergySpectrum& spectrum, double center,
                                               double width, std::uint64_t seed);

  const ComplexVector& coefficients() const noexcept { return c_; }
  Index dim() const noexcept { return c_.size(); }

 private:
  ComplexVector c_;
};

/// sum_{m != n} |c_n|^2 |c_m|^2 |A_mn|^2.
double dynamical_fluctuation(const OperatorEigenbasis& a, const PureStateCoefficients& state);

struct DynamicalFluctuation {
  double value = 0.0;
  /// e^{-S(E)} max_omega |f|^2 at the state's mean energy, when available.
  std::optional<double> envelope_comparator;
  double mean_energy = 0.0;
};

DynamicalFluctuation dynamical_fluctuation(const OperatorEigenbasis& a,
                                           const PureStateCoefficients& state,
                                           const EnergySpectrum& spectrum,
                                           const EntropyModel& entropy,
                                           const EnvelopeModel& envelope);

/// sum_{m != n} |A_mn|^2.
double static_fluctuation(const OperatorEigenbasis& a, Index n);

/// <n|A^2|n> - <n|A|n>^2.
double static_fluctuation_variance(const OperatorEigenbasis& a, Index n);

/// int e^{beta w/2} e^{-pi|w|/lambda} dw = (2pi/lambda) / ((pi/lambda)^2 - (beta/2)^2).
/// Throws DivergenceError when pi/lambda <= beta/2.
double static_fluct_integral(double rate, double beta);

struct FluctuationInputs {
  std::optional<double> rate;
  std::optional<double> epsilon_code;
  int locality = 1;
  int logical_qubits = 1;
  double entropy = 0.0;
  double beta = 1.0;
  /// Characteristic frequency for the dynamical bound.
  double omega = 0.0;
  std::optional<double> measured_dynamic;
  std::optional<double> measured_static;
  /// (omega, F_tilde) samples to compare against the spectral bounds.
  std::vector<std::pair<double, double>> measured_spectral;
  double slack = 10.0;
};

struct SpectralBoundPoint {
  double omega = 0.0;
  double measured = 0.0;
  std::optional<double> rate_bound;
  std::optional<double> code_bound;
};

struct FluctuationReport {
  std::optional<double> measured_dynamic;
  std::optional<double> measured_static;

  /// exp(-S - pi|omega|/lambda).
  std::optional<double> dynamic_bound_rate;
  /// exp(-S/2 + 2 ln(epsilon_code / 2^{d+2k})): the rate form with lambda
  /// eliminated through the code-error bound.
  std::optional<double> dynamic_bound_code;
  /// exp(-3S/2 - 2 ln(epsilon_code / 2^{d+2k})), the printed variant.
  std::optional<double> dynamic_bound_code_as_printed;

  std::optional<double> static_bound;
  bool static_divergent = false;

  std::vector<SpectralBoundPoint> spectral;

  std::optional<double> dynamic_slack;
  std::optional<double> static_slack;
  bool within_slack = true;
  bool vacuous = false;
};

FluctuationReport fluctuation_bounds(const FluctuationInputs& inputs);

}  // namespace ethlab
