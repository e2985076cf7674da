#include "ethlab/chaos_dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ethlab/errors.hpp"
#include "ethlab/rng.hpp"

namespace ethlab {

namespace {

void check_dims(const OperatorEigenbasis& a, const EnergySpectrum& spectrum) {
  if (a.dim() != spectrum.dim()) {
    throw ValidationError("operator dimension " + std::to_string(a.dim()) +
                          " does not match spectrum dimension " + std::to_string(spectrum.dim()));
  }
}

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw ValidationError("time grid is empty");
  for (const double t : times) {
    if (!std::isfinite(t)) throw ValidationError("time grid contains a non-finite value");
  }
}

RealMatrix squared_moduli(const OperatorEigenbasis& a) { return a.entries().cwiseAbs2(); }

void append_number(std::string& line, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  line.append(buf, res.ptr);
}

// Re/Im of sum_m w_m x_m conj((W x)_m) for every column of x.
std::vector<std::complex<double>> quadratic_forms(const RealMatrix& w, const RealMatrix& xr,
                                                  const RealMatrix& xi, const RealVector& left) {
  const RealMatrix zr = w * xr;
  const RealMatrix zi = w * xi;
  std::vector<std::complex<double>> out(static_cast<std::size_t>(xr.cols()));
  for (Index c = 0; c < xr.cols(); ++c) {
    double re = 0.0;
    double im = 0.0;
    for (Index m = 0; m < xr.rows(); ++m) {
      re += left(m) * (xr(m, c) * zr(m, c) + xi(m, c) * zi(m, c));
      im += left(m) * (xi(m, c) * zr(m, c) - xr(m, c) * zi(m, c));
    }
    out[static_cast<std::size_t>(c)] = {re, im};
  }
  return out;
}

void phases(const EnergySpectrum& spectrum, const RealVector& amplitude,
            const std::vector<double>& times, RealMatrix& xr, RealMatrix& xi) {
  const Index d = spectrum.dim();
  const auto nt = static_cast<Index>(times.size());
  xr.resize(d, nt);
  xi.resize(d, nt);
  for (Index c = 0; c < nt; ++c) {
    for (Index n = 0; n < d; ++n) {
      const double phase = spectrum.energy(n) * times[static_cast<std::size_t>(c)];
      xr(n, c) = amplitude(n) * std::cos(phase);
      xi(n, c) = amplitude(n) * std::sin(phase);
    }
  }
}

// Values that must be real up to rounding; the imaginary part is dropped.
void enforce_real(std::vector<std::complex<double>>& values, double scale, const char* what) {
  for (auto& v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericError(std::string(what) + " produced a non-finite value");
    }
    if (std::abs(v.imag()) > 1e-9 * std::max(scale, 1e-300)) {
      throw NumericError(std::string(what) + " has an imaginary part " + std::to_string(v.imag()) +
                         "; operator is not Hermitian?");
    }
    v = {v.real(), 0.0};
  }
}

double gaussian(double x, double sigma) {
  return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double thermal_mean(const OperatorEigenbasis& a, const ThermalState& th) {
  double mean = 0.0;
  for (Index n = 0; n < a.dim(); ++n) mean += th.weights(n) * a(n, n).real();
  return mean;
}

}  // namespace

double ThermalState::mean_energy(const EnergySpectrum& spectrum) const {
  double e = 0.0;
  for (Index n = 0; n < spectrum.dim(); ++n) e += weights(n) * spectrum.energy(n);
  return e;
}

ThermalState thermal_state(const EnergySpectrum& spectrum, double beta) {
  if (!std::isfinite(beta) || beta < 0.0) throw ValidationError("beta must be finite and >= 0");
  const Index d = spectrum.dim();
  ThermalState th;
  th.beta = beta;
  th.log_weights.resize(d);
  for (Index n = 0; n < d; ++n) th.log_weights(n) = -beta * spectrum.energy(n);
  const double top = th.log_weights.maxCoeff();
  double sum = 0.0;
  for (Index n = 0; n < d; ++n) sum += std::exp(th.log_weights(n) - top);
  th.log_partition = top + std::log(sum);
  th.log_weights.array() -= th.log_partition;
  if (beta == 0.0) {
    th.weights = RealVector::Constant(d, 1.0 / static_cast<double>(d));
  } else {
    th.weights = th.log_weights.array().exp();
  }
  return th;
}

// p^{power}; exact roots at beta = 0 so that power-of-two dimensions stay exact.
RealVector ThermalState::power(double exponent) const {
  if (beta == 0.0) {
    if (exponent == 0.5) return weights.array().sqrt();
    if (exponent == 0.25) return weights.array().sqrt().sqrt();
  }
  return (exponent * log_weights.array()).exp();
}

std::string to_string(CorrelatorKind kind) {
  switch (kind) {
    case CorrelatorKind::f2: return "F2";
    case CorrelatorKind::fsym: return "Fsym";
    case CorrelatorKind::resp: return "Resp";
    case CorrelatorKind::otoc: return "OTOC";
  }
  return "unknown";
}

void CorrelatorSeries::write_csv(std::ostream& out) const {
  std::string text = "t,re,im\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    append_number(text, times[i]);
    text += ',';
    append_number(text, values[i].real());
    text += ',';
    append_number(text, values[i].imag());
    text += '\n';
  }
  out << text;
}

std::vector<double> uniform_grid(double start, double stop, std::size_t count) {
  if (count == 0) throw ValidationError("grid needs at least one point");
  if (!std::isfinite(start) || !std::isfinite(stop)) throw ValidationError("grid ends must be finite");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = start;
    return grid;
  }
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = start + step * static_cast<double>(i);
  grid.back() = stop;
  return grid;
}

CorrelatorSeries two_point(const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta,
                           const std::vector<double>& times) {
  check_dims(a, spectrum);
  check_times(times);
  const ThermalState th = thermal_state(spectrum, beta);
  const RealVector q = th.power(0.5);
  const RealMatrix w = squared_moduli(a);
  RealMatrix xr, xi;
  phases(spectrum, q, times, xr, xi);
  CorrelatorSeries out;
  out.kind = CorrelatorKind::f2;
  out.times = times;
  out.beta = beta;
  out.regulator_exponent = 0.5;
  out.values = quadratic_forms(w, xr, xi, RealVector::Ones(spectrum.dim()));
  const double scale = (q.transpose() * w * q).value();
  enforce_real(out.values, scale, "F2");
  return out;
}

std::pair<CorrelatorSeries, CorrelatorSeries> symmetric_and_response(
    const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta,
    const std::vector<double>& times) {
  check_dims(a, spectrum);
  check_times(times);
  const ThermalState th = thermal_state(spectrum, beta);
  const RealMatrix w = squared_moduli(a);
  RealMatrix ur, ui;
  phases(spectrum, RealVector::Ones(spectrum.dim()), times, ur, ui);
  // C(t) = <A(t) A> = sum_m p_m u_m conj((W u)_m).
  const std::vector<std::complex<double>> c = quadratic_forms(w, ur, ui, th.weights);
  const double mean = thermal_mean(a, th);

  CorrelatorSeries fsym, resp;
  fsym.kind = CorrelatorKind::fsym;
  resp.kind = CorrelatorKind::resp;
  fsym.times = resp.times = times;
  fsym.beta = resp.beta = beta;
  fsym.values.resize(times.size());
  resp.values.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    fsym.values[i] = {c[i].real() - mean * mean, 0.0};
    resp.values[i] = {0.0, 2.0 * c[i].imag()};
  }
  return {std::move(fsym), std::move(resp)};
}

CorrelatorSeries otoc(const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta,
                      const std::vector<double>& times, const OtocOptions& options) {
  check_dims(a, spectrum);
  check_times(times);
  const Index d = spectrum.dim();
  const double flops = 8.0 * std::pow(static_cast<double>(d), 3) * static_cast<double>(times.size());
  if (d > options.max_dim) {
    throw CostGuardError("OTOC at D = " + std::to_string(d) + " exceeds the guard D <= " +
                             std::to_string(options.max_dim) + " (estimated " +
                             std::to_string(flops) + " flops)",
                         flops);
  }
  const ThermalState th = thermal_state(spectrum, beta);
  const ComplexMatrix& am = a.entries();
  // Regulated matrix without phases; the phases enter as diagonal scalings.
  // At beta = 0 every rho^{1/4} is D^{-1/4}; the product 1/D is applied once.
  ComplexMatrix reg;
  double norm = 1.0;
  if (beta == 0.0) {
    reg = am;
    norm = 1.0 / static_cast<double>(d);
  } else {
    const RealVector r = th.power(0.25);
    reg = r.asDiagonal() * am * r.asDiagonal();
  }

  CorrelatorSeries out;
  out.kind = CorrelatorKind::otoc;
  out.times = times;
  out.beta = beta;
  out.regulator_exponent = 0.25;
  out.values.resize(times.size());
  ComplexVector u(d);
  ComplexMatrix m(d, d);
  ComplexMatrix b(d, d);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    for (Index n = 0; n < d; ++n) u(n) = std::polar(1.0, spectrum.energy(n) * t);
    if (t == 0.0) {
      m = reg;
    } else {
      m = u.asDiagonal() * reg * u.conjugate().asDiagonal();
    }
    b.noalias() = m * am;
    out.values[i] = norm * b.cwiseProduct(b.transpose()).sum();
  }
  double scale = 0.0;
  for (const auto& v : out.values) scale = std::max(scale, std::abs(v));
  enforce_real(out.values, scale, "OTOC");
  return out;
}

std::vector<LehmannPeak> lehmann_peaks(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                       double beta) {
  check_dims(a, spectrum);
  const ThermalState th = thermal_state(spectrum, beta);
  const Index d = spectrum.dim();
  std::vector<LehmannPeak> peaks;
  peaks.reserve(static_cast<std::size_t>(d * d - d + 1));
  const double mean = thermal_mean(a, th);
  double zero = -mean * mean;
  for (Index m = 0; m < d; ++m) {
    const double pm = th.weights(m);
    zero += pm * std::norm(a(m, m));
    for (Index n = 0; n < d; ++n) {
      if (n == m) continue;
      const double w = std::norm(a(m, n));
      const double pn = th.weights(n);
      peaks.push_back({spectrum.energy(n) - spectrum.energy(m), 0.5 * (pm + pn) * w, (pm - pn) * w});
    }
  }
  peaks.push_back({0.0, zero, 0.0});
  return peaks;
}

void SpectralDensity::write_csv(std::ostream& out) const {
  std::string text = "omega,F,rho\n";
  for (std::size_t i = 0; i < omega.size(); ++i) {
    append_number(text, omega[i]);
    text += ',';
    append_number(text, fluctuation[i]);
    text += ',';
    append_number(text, response[i]);
    text += '\n';
  }
  out << text;
}

double transition_spacing(const EnergySpectrum& spectrum, double omega_lo, double omega_hi) {
  if (!(omega_hi > omega_lo)) throw ValidationError("frequency range must have positive width");
  const RealVector& ev = spectrum.eigenvalues();
  const double* begin = ev.data();
  const double* end = begin + ev.size();
  std::size_t count = 0;
  for (const double* self = begin; self != end; ++self) {
    const double* lo = std::lower_bound(begin, end, *self + omega_lo);
    const double* hi = std::upper_bound(begin, end, *self + omega_hi);
    count += static_cast<std::size_t>(hi - lo);
    if (self >= lo && self < hi) --count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  return (omega_hi - omega_lo) / static_cast<double>(count);
}

SpectralDensity spectral_densities(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                                   double beta, double sigma, const std::vector<double>& omega_grid) {
  check_dims(a, spectrum);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma_omega must be > 0");
  if (omega_grid.size() < 2) throw ValidationError("frequency grid needs at least two points");
  if (!std::is_sorted(omega_grid.begin(), omega_grid.end()) ||
      std::adjacent_find(omega_grid.begin(), omega_grid.end()) != omega_grid.end()) {
    throw ValidationError("frequency grid must be strictly ascending");
  }
  const double spacing = transition_spacing(spectrum, omega_grid.front(), omega_grid.back());
  if (sigma < 2.0 * spacing) {
    throw ValidationError("sigma_omega = " + std::to_string(sigma) +
                          " under-resolves the transition spectrum (needs >= 2 x " +
                          std::to_string(spacing) + ")");
  }
  const ThermalState th = thermal_state(spectrum, beta);
  const Index d = spectrum.dim();
  const std::size_t g = omega_grid.size();
  SpectralDensity sd;
  sd.omega = omega_grid;
  sd.fluctuation.assign(g, 0.0);
  sd.response.assign(g, 0.0);
  sd.sigma = sigma;
  sd.beta = beta;
  const double cutoff = 8.0 * sigma;

  auto deposit = [&](double nu, double wf, double wr) {
    const auto lo = std::lower_bound(omega_grid.begin(), omega_grid.end(), nu - cutoff);
    const auto hi = std::upper_bound(omega_grid.begin(), omega_grid.end(), nu + cutoff);
    for (auto it = lo; it != hi; ++it) {
      const auto i = static_cast<std::size_t>(it - omega_grid.begin());
      const double k = gaussian(*it - nu, sigma);
      sd.fluctuation[i] += wf * k;
      sd.response[i] += wr * k;
    }
  };

  const double mean = thermal_mean(a, th);
  double zero = -mean * mean;
  for (Index m = 0; m < d; ++m) {
    const double pm = th.weights(m);
    zero += pm * std::norm(a(m, m));
    for (Index n = 0; n < d; ++n) {
      if (n == m) continue;
      const double w = std::norm(a(m, n));
      if (w == 0.0) continue;
      const double pn = th.weights(n);
      deposit(spectrum.energy(n) - spectrum.energy(m), 0.5 * (pm + pn) * w, (pm - pn) * w);
    }
  }
  if (zero != 0.0) deposit(0.0, zero, 0.0);
  return sd;
}

double fdt_prefactor(FdtRelation relation) { return relation == FdtRelation::kubo ? 0.5 : 2.0; }

FdtResult fdt_check(const SpectralDensity& sd, double threshold, FdtRelation relation) {
  if (!(threshold >= 0.0)) throw ValidationError("threshold must be >= 0");
  FdtResult res;
  res.relation = relation;
  if (sd.beta == 0.0) {
    res.beta_zero = true;
    res.empty = true;
    return res;
  }
  double rho_max = 0.0;
  for (const double r : sd.response) rho_max = std::max(rho_max, std::abs(r));
  const double c = fdt_prefactor(relation);
  for (std::size_t i = 0; i < sd.omega.size(); ++i) {
    const double w = sd.omega[i];
    if (std::abs(w) < 4.0 * sd.sigma) continue;
    if (rho_max == 0.0 || std::abs(sd.response[i]) < threshold * rho_max) continue;
    const double f = sd.fluctuation[i];
    if (f == 0.0) continue;
    const double predicted = c * sd.response[i] / std::tanh(0.5 * sd.beta * w);
    res.max_deviation = std::max(res.max_deviation, std::abs(f - predicted) / std::abs(f));
    ++res.admissible_points;
  }
  res.empty = res.admissible_points == 0;
  return res;
}

double fdt_peak_deviation(const std::vector<LehmannPeak>& peaks, double beta, FdtRelation relation) {
  if (!(beta > 0.0)) throw ValidationError("peak-level FDT needs beta > 0");
  const double c = fdt_prefactor(relation);
  double worst = 0.0;
  for (const auto& p : peaks) {
    if (p.frequency == 0.0 || p.fluctuation == 0.0) continue;
    const double predicted = c * p.response / std::tanh(0.5 * beta * p.frequency);
    worst = std::max(worst, std::abs(p.fluctuation - predicted) / std::abs(p.fluctuation));
  }
  return worst;
}

double two_point_plateau(const OperatorEigenbasis& a, const EnergySpectrum& spectrum, double beta) {
  check_dims(a, spectrum);
  const ThermalState th = thermal_state(spectrum, beta);
  double sum = 0.0;
  for (Index n = 0; n < a.dim(); ++n) sum += th.weights(n) * std::norm(a(n, n));
  return sum;
}

std::optional<double> dissipation_time(const CorrelatorSeries& f2, double plateau) {
  if (f2.times.empty() || f2.times.size() != f2.values.size()) {
    throw ValidationError("correlator series is empty or inconsistent");
  }
  const double g0 = std::abs(f2.values[0].real() - plateau);
  if (g0 == 0.0) return std::nullopt;
  const double target = g0 / std::numbers::e;
  double prev = g0;
  for (std::size_t i = 1; i < f2.times.size(); ++i) {
    const double g = std::abs(f2.values[i].real() - plateau);
    if (g <= target) {
      const double frac = prev == g ? 0.0 : (prev - target) / (prev - g);
      return f2.times[i - 1] + frac * (f2.times[i] - f2.times[i - 1]);
    }
    prev = g;
  }
  return std::nullopt;
}

std::string to_string(FitReliability reliability) {
  switch (reliability) {
    case FitReliability::high: return "high";
    case FitReliability::moderate: return "moderate";
    case FitReliability::low: return "low";
  }
  return "unknown";
}

LyapunovFit fit_lyapunov(const CorrelatorSeries& series, double f2_zero, double epsilon_reg,
                         double window_lo, double window_hi, std::optional<double> t_d) {
  if (series.times.empty() || series.times.size() != series.values.size()) {
    throw ValidationError("OTOC series is empty or inconsistent");
  }
  if (!(window_hi > window_lo)) throw ValidationError("fit window must have positive width");
  if (window_lo < series.times.front() || window_hi > series.times.back()) {
    throw ValidationError("fit window lies outside the time grid");
  }
  if (!(epsilon_reg >= 0.0)) throw ValidationError("epsilon_reg must be >= 0");
  const double denom = f2_zero * f2_zero + epsilon_reg;
  if (!(denom > 0.0)) throw ValidationError("F2(0)^2 + epsilon_reg must be positive");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (t < window_lo || t > window_hi) continue;
    const double gap = 1.0 - series.values[i].real() / denom;
    if (!(gap > 0.0)) {
      throw FitRejectedError("1 - f(t) = " + std::to_string(gap) + " <= 0 at t = " + std::to_string(t),
                             FitRejection::nonpositive_gap, std::numeric_limits<double>::quiet_NaN());
    }
    xs.push_back(t);
    ys.push_back(std::log(gap));
  }
  if (xs.size() < 3) throw EmptyWindowError("fit window holds fewer than three time points");

  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ssr += r * r;
  }

  // A flat series gives a slope at rounding level; treat it as zero growth.
  double y_scale = 0.0;
  for (const double y : ys) y_scale = std::max(y_scale, std::abs(y));
  const double span = xs.back() - xs.front();
  if (!(slope * span > 1e-12 * std::max(1.0, y_scale))) {
    throw FitRejectedError("log(1 - f) does not grow over the window (slope " + std::to_string(slope) + ")",
                           FitRejection::non_growing, slope);
  }

  LyapunovFit fit;
  fit.rate = slope;
  fit.scrambling_time = -intercept / slope;
  fit.dissipation_time = t_d.value_or(series.times.front());
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.residual_norm = std::sqrt(ssr);
  fit.epsilon_reg = epsilon_reg;
  fit.points = xs.size();
  if (fit.dissipation_time >= fit.scrambling_time || window_hi >= fit.scrambling_time) {
    throw FitRejectedError("no valid hierarchy: t_d = " + std::to_string(fit.dissipation_time) +
                               ", window end = " + std::to_string(window_hi) +
                               ", t_s = " + std::to_string(fit.scrambling_time),
                           FitRejection::hierarchy, slope);
  }
  const double ratio = fit.dissipation_time > 0.0 ? fit.scrambling_time / fit.dissipation_time
                                                  : std::numeric_limits<double>::infinity();
  fit.reliability = ratio >= 10.0 ? FitReliability::high
                    : ratio >= 3.0 ? FitReliability::moderate
                                   : FitReliability::low;
  return fit;
}

PureStateCoefficients::PureStateCoefficients(ComplexVector coefficients) : c_(std::move(coefficients)) {
  if (c_.size() == 0) throw ValidationError("state has no coefficients");
  if (!c_.allFinite()) throw ValidationError("state coefficients must be finite");
  const double norm = c_.squaredNorm();
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw ValidationError("state norm^2 = " + std::to_string(norm) + " deviates from 1");
  }
}

PureStateCoefficients PureStateCoefficients::gaussian_packet(const EnergySpectrum& spectrum, double center,
                                                             double width, std::uint64_t seed) {
  if (!(width > 0.0)) throw ValidationError("packet width must be > 0");
  const Index d = spectrum.dim();
  ComplexVector c(d);
  for (Index n = 0; n < d; ++n) {
    const double x = spectrum.energy(n) - center;
    const double amp = std::exp(-x * x / (4.0 * width * width));
    const double phase = 2.0 * std::numbers::pi * rng::uniform(seed, rng::Stream::state, static_cast<std::uint64_t>(n));
    c(n) = std::polar(amp, phase);
  }
  const double norm = c.norm();
  if (!(norm > 0.0)) throw ValidationError("packet has no weight on the spectrum");
  c /= norm;
  return PureStateCoefficients(std::move(c));
}

double dynamical_fluctuation(const OperatorEigenbasis& a, const PureStateCoefficients& state) {
  if (a.dim() != state.dim()) throw ValidationError("state and operator dimensions differ");
  const RealVector w = state.coefficients().cwiseAbs2();
  double sum = 0.0;
  for (Index m = 0; m < a.dim(); ++m) {
    double row = 0.0;
    for (Index n = 0; n < a.dim(); ++n) {
      if (n != m) row += w(n) * std::norm(a(m, n));
    }
    sum += w(m) * row;
  }
  return sum;
}

DynamicalFluctuation dynamical_fluctuation(const OperatorEigenbasis& a, const PureStateCoefficients& state,
                                           const EnergySpectrum& spectrum, const EntropyModel& entropy,
                                           const EnvelopeModel& envelope) {
  check_dims(a, spectrum);
  DynamicalFluctuation out;
  out.value = dynamical_fluctuation(a, state);
  const RealVector w = state.coefficients().cwiseAbs2();
  for (Index n = 0; n < spectrum.dim(); ++n) out.mean_energy += w(n) * spectrum.energy(n);
  std::optional<double> best;
  const auto& edges = envelope.binning().energy_edges;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    if (out.mean_energy < edges[s] || out.mean_energy > edges[s + 1]) continue;
    for (std::size_t j = 0; j < envelope.omega_bins(); ++j) {
      const EnvelopeBin& b = envelope.bin(s, j);
      if (b.usable && (!best || b.f2 > *best)) best = b.f2;
    }
  }
  if (best) out.envelope_comparator = std::exp(-entropy.entropy(out.mean_energy)) * *best;
  return out;
}

double static_fluctuation(const OperatorEigenbasis& a, Index n) {
  if (n < 0 || n >= a.dim()) throw ValidationError("eigenstate index out of range");
  double sum = 0.0;
  for (Index m = 0; m < a.dim(); ++m) {
    if (m != n) sum += std::norm(a(m, n));
  }
  return sum;
}

double static_fluctuation_variance(const OperatorEigenbasis& a, Index n) {
  if (n < 0 || n >= a.dim()) throw ValidationError("eigenstate index out of range");
  const ComplexMatrix& m = a.entries();
  const std::complex<double> second = m.row(n).transpose().cwiseProduct(m.col(n)).sum();
  const double first = m(n, n).real();
  return second.real() - first * first;
}

double static_fluct_integral(double rate, double beta) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("lambda must be positive and finite");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and >= 0");
  const double a = std::numbers::pi / rate;
  const double b = 0.5 * beta;
  const double saturation = beta > 0.0 ? 2.0 * std::numbers::pi / beta : std::numeric_limits<double>::infinity();
  if (a <= b) {
    throw DivergenceError("static fluctuation integral diverges: pi/lambda = " + std::to_string(a) +
                              " <= beta/2 = " + std::to_string(b) + " (lambda >= 2 pi / beta = " +
                              std::to_string(saturation) + ")",
                          saturation);
  }
  return (2.0 * a) / ((a - b) * (a + b));
}

FluctuationReport fluctuation_bounds(const FluctuationInputs& in) {
  const bool have_rate = in.rate.has_value();
  const bool have_code = in.epsilon_code.has_value();
  if (!have_rate && !have_code) throw ValidationError("fluctuation bounds need lambda or epsilon_code");
  if (have_rate && !(*in.rate > 0.0)) throw DomainError("lambda must be > 0");
  if (have_code && !(*in.epsilon_code >= 0.0)) throw DomainError("epsilon_code must be >= 0");
  if (!(in.slack >= 1.0)) throw ValidationError("slack factor must be >= 1");
  if (!(in.beta >= 0.0)) throw ValidationError("beta must be >= 0");

  FluctuationReport out;
  out.measured_dynamic = in.measured_dynamic;
  out.measured_static = in.measured_static;
  const double w = std::abs(in.omega);
  const double log_prefactor = (in.locality + 2.0 * in.logical_qubits) * std::numbers::ln2;
  const double log_ratio = have_code ? std::log(*in.epsilon_code) - log_prefactor : 0.0;

  if (have_rate) out.dynamic_bound_rate = std::exp(-in.entropy - std::numbers::pi * w / *in.rate);
  if (have_code) {
    out.dynamic_bound_code = std::exp(-0.5 * in.entropy + 2.0 * log_ratio);
    out.dynamic_bound_code_as_printed = std::exp(-1.5 * in.entropy - 2.0 * log_ratio);
    // epsilon_code >= 2^{d+2k} means the code guarantees nothing.
    if (log_ratio >= 0.0) out.vacuous = true;
  }

  if (have_rate) {
    try {
      out.static_bound = static_fluct_integral(*in.rate, in.beta);
    } catch (const DivergenceError&) {
      out.static_divergent = true;
      out.vacuous = true;
    }
  }

  for (const auto& [omega, measured] : in.measured_spectral) {
    SpectralBoundPoint p;
    p.omega = omega;
    p.measured = measured;
    const double ch = 4.0 * std::numbers::pi * std::cosh(0.5 * in.beta * omega);
    if (have_rate) p.rate_bound = ch * std::exp(-std::numbers::pi * std::abs(omega) / *in.rate);
    if (have_code) p.code_bound = ch * std::exp(0.5 * in.entropy + 2.0 * log_ratio);
    out.spectral.push_back(p);
  }

  const std::optional<double> dyn_bound = out.dynamic_bound_rate ? out.dynamic_bound_rate : out.dynamic_bound_code;
  if (in.measured_dynamic && dyn_bound && *dyn_bound > 0.0) {
    out.dynamic_slack = *in.measured_dynamic / *dyn_bound;
    if (*out.dynamic_slack > in.slack) out.within_slack = false;
  }
  if (in.measured_static && out.static_bound && *out.static_bound > 0.0) {
    out.static_slack = *in.measured_static / *out.static_bound;
    if (*out.static_slack > in.slack) out.within_slack = false;
  }
  for (const auto& p : out.spectral) {
    const std::optional<double> b = p.rate_bound ? p.rate_bound : p.code_bound;
    if (b && p.measured > in.slack * *b) out.within_slack = false;
  }
  return out;
}

}  // namespace ethlab
