#include "ethlab/aqec_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "ethlab/errors.hpp"
#include "ethlab/rng.hpp"

namespace ethlab {

namespace {

double code_prefactor(int locality, int logical_qubits) {
  return std::ldexp(1.0, locality + 2 * logical_qubits);
}

}  // namespace

void CodeSpec::validate() const {
  if (logical_qubits < 0 || logical_qubits > 20) throw ValidationError("logical qubit count out of range");
  if (locality < 0) throw ValidationError("error locality must be >= 0");
  if (physical_qubits < 1) throw ValidationError("physical qubit count must be >= 1");
  if (locality > physical_qubits) throw ValidationError("error locality d exceeds N");
  const std::size_t expected = std::size_t{1} << logical_qubits;
  if (members.size() != expected) {
    throw ValidationError("code needs 2^k = " + std::to_string(expected) + " members, got " +
                          std::to_string(members.size()));
  }
  std::vector<Index> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("code members must be distinct");
  }
  for (const Index m : members) {
    if (!window.contains(m)) {
      throw ValidationError("code member " + std::to_string(m) + " lies outside the window");
    }
  }
}

CodeSpec select_code(const EnergySpectrum& spectrum, const MicrocanonicalWindow& window,
                     int logical_qubits, int locality, int physical_qubits,
                     CodeSelection selection, std::uint64_t seed) {
  if (logical_qubits < 0 || logical_qubits > 20) throw ValidationError("logical qubit count out of range");
  const auto wanted = static_cast<Index>(Index{1} << logical_qubits);
  if (window.last > spectrum.dim()) throw ValidationError("window exceeds spectrum");
  if (wanted > window.size()) {
    throw ValidationError("2^k = " + std::to_string(wanted) + " exceeds window size " +
                          std::to_string(window.size()));
  }
  std::vector<Index> candidates(static_cast<std::size_t>(window.size()));
  std::iota(candidates.begin(), candidates.end(), window.first);
  if (selection == CodeSelection::nearest_center) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
      return std::abs(spectrum.energy(a) - window.center) < std::abs(spectrum.energy(b) - window.center);
    });
  } else {
    for (std::size_t i = candidates.size() - 1; i > 0; --i) {
      const double u = rng::uniform(seed, rng::Stream::code_selection, i);
      const auto j = std::min(static_cast<std::size_t>(u * static_cast<double>(i + 1)), i);
      std::swap(candidates[i], candidates[j]);
    }
  }
  candidates.resize(static_cast<std::size_t>(wanted));
  std::sort(candidates.begin(), candidates.end());

  CodeSpec code;
  code.members = std::move(candidates);
  code.logical_qubits = logical_qubits;
  code.locality = locality;
  code.physical_qubits = physical_qubits;
  code.window = window;
  code.validate();
  return code;
}

KlResidualReport kl_residuals(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                              const CodeSpec& code) {
  if (a.dim() != spectrum.dim()) {
    throw ValidationError("operator dimension " + std::to_string(a.dim()) +
                          " does not match spectrum dimension " + std::to_string(spectrum.dim()));
  }
  code.validate();
  for (const Index m : code.members) {
    if (m < 0 || m >= a.dim()) throw ValidationError("code member index out of range");
  }
  const auto size = static_cast<Index>(code.members.size());
  const ComplexMatrix& m = a.entries();

  // Gram matrix of the member columns, upper triangle mirrored.
  ComplexMatrix gram(size, size);
  for (Index j = 0; j < size; ++j) {
    const auto col_j = m.col(code.members[static_cast<std::size_t>(j)]);
    for (Index i = 0; i <= j; ++i) {
      const auto col_i = m.col(code.members[static_cast<std::size_t>(i)]);
      std::complex<double> sum = 0.0;
      for (Index k = 0; k < m.rows(); ++k) sum += std::conj(col_i(k)) * col_j(k);
      if (i == j) sum = sum.real();
      gram(i, j) = sum;
      gram(j, i) = std::conj(sum);
    }
  }

  KlResidualReport report;
  report.code = code;
  const RealVector diag = gram.diagonal().real();
  report.c_a = diag.mean();
  report.diagonal_spread = diag.maxCoeff() - diag.minCoeff();
  report.epsilon = gram;
  report.epsilon.diagonal().array() -= report.c_a;
  report.epsilon_max = report.epsilon.cwiseAbs().maxCoeff();
  report.epsilon_code = code_prefactor(code.locality, code.logical_qubits) * std::sqrt(report.epsilon_max);
  report.omega.resize(size, size);
  double energy_sum = 0.0;
  for (Index i = 0; i < size; ++i) {
    const double ei = spectrum.energy(code.members[static_cast<std::size_t>(i)]);
    energy_sum += ei;
    for (Index j = 0; j < size; ++j) {
      report.omega(i, j) = ei - spectrum.energy(code.members[static_cast<std::size_t>(j)]);
    }
  }
  report.mean_energy = energy_sum / static_cast<double>(size);
  return report;
}

double theorem1_rhs(double entropy, double rate, double omega, int locality, int logical_qubits,
                    Theorem1Form form) {
  if (!(rate > 0.0)) throw DomainError("theorem1_rhs needs lambda > 0, got " + std::to_string(rate));
  const double denom = form == Theorem1Form::stated ? 2.0 : 4.0;
  return code_prefactor(locality, logical_qubits) *
         std::exp(-entropy / 4.0 - std::numbers::pi * std::abs(omega) / (denom * rate));
}

std::optional<double> theorem2_lambda_lower(double epsilon_code, int locality, int logical_qubits,
                                            double entropy, double omega) {
  if (epsilon_code < 0.0) throw DomainError("epsilon_code must be >= 0");
  const double log_ratio = epsilon_code == 0.0
                               ? std::numeric_limits<double>::infinity()
                               : std::log(code_prefactor(locality, logical_qubits) / epsilon_code);
  const double denominator = 2.0 * log_ratio - entropy / 2.0;
  if (!(denominator > 0.0)) return std::nullopt;
  return std::numbers::pi * std::abs(omega) / denominator;
}

std::string to_string(LambdaSource source) {
  switch (source) {
    case LambdaSource::automatic: return "automatic";
    case LambdaSource::fitted: return "fitted";
    case LambdaSource::envelope: return "envelope";
    case LambdaSource::chaos_bound: return "chaos-bound";
  }
  return "unknown";
}

BoundReport check_bounds(const KlResidualReport& report, const EnvelopeModel* envelope,
                         const EntropyModel& entropy, const BoundInputs& in) {
  if (!(in.beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (!(in.slack >= 1.0)) throw ValidationError("slack factor must be >= 1");
  BoundReport out;
  out.entropy = entropy.entropy(report.mean_energy);
  out.beta = in.beta;
  out.slack = in.slack;
  out.epsilon_code = report.epsilon_code;
  out.chaos_bound_value =
      in.beta > 0.0 ? 2.0 * std::numbers::pi / in.beta : std::numeric_limits<double>::infinity();
  out.dissipation_time = in.dissipation_time;
  out.scrambling_time = in.scrambling_time;

  const std::optional<double> gamma = envelope ? envelope->decay_rate() : in.envelope_decay_rate;
  const bool have_fit = in.fitted_rate && *in.fitted_rate > 0.0;
  const bool have_gamma = gamma && *gamma > 0.0;
  const bool have_bound = in.beta > 0.0;
  auto use = [&](LambdaSource s) {
    out.lambda_source = s;
    switch (s) {
      case LambdaSource::fitted: out.lambda_used = *in.fitted_rate; break;
      case LambdaSource::envelope: out.lambda_used = std::numbers::pi / (2.0 * *gamma); break;
      default: out.lambda_used = out.chaos_bound_value; break;
    }
  };
  switch (in.source) {
    case LambdaSource::automatic:
      if (have_fit) use(LambdaSource::fitted);
      else if (have_gamma) use(LambdaSource::envelope);
      else if (have_bound) use(LambdaSource::chaos_bound);
      else throw ValidationError("no lambda source resolvable (no fit, no envelope decay, beta = 0)");
      break;
    case LambdaSource::fitted:
      if (!have_fit) throw ValidationError("lambda source 'fitted' requested without a valid fit");
      use(LambdaSource::fitted);
      break;
    case LambdaSource::envelope:
      if (!have_gamma) throw ValidationError("lambda source 'envelope' requested without a positive decay rate");
      use(LambdaSource::envelope);
      break;
    case LambdaSource::chaos_bound:
      if (!have_bound) throw ValidationError("chaos bound is infinite at beta = 0");
      use(LambdaSource::chaos_bound);
      break;
  }

  const CodeSpec& code = report.code;
  const auto size = static_cast<Index>(code.members.size());
  const PairBound* widest = nullptr;
  for (Index i = 0; i < size; ++i) {
    for (Index j = i + 1; j < size; ++j) {
      PairBound pair;
      pair.i = code.members[static_cast<std::size_t>(i)];
      pair.j = code.members[static_cast<std::size_t>(j)];
      pair.omega = report.omega(i, j);
      pair.theorem1_rhs = theorem1_rhs(out.entropy, out.lambda_used, pair.omega, code.locality,
                                       code.logical_qubits);
      pair.theorem2_lambda_lower = theorem2_lambda_lower(
          report.epsilon_code, code.locality, code.logical_qubits, out.entropy, pair.omega);
      pair.theorem1_slack = report.epsilon_code / pair.theorem1_rhs;
      pair.theorem1_within_slack = pair.theorem1_slack <= in.slack;
      pair.theorem2_within_slack =
          !pair.theorem2_lambda_lower || *pair.theorem2_lambda_lower <= in.slack * out.lambda_used;
      out.pairs.push_back(pair);
    }
  }
  for (const auto& p : out.pairs) {
    if (!widest || std::abs(p.omega) > std::abs(widest->omega)) widest = &p;
  }

  if (widest) {
    out.max_omega = std::abs(widest->omega);
    out.theorem1_rhs = widest->theorem1_rhs;
    out.theorem2_lambda_lower = widest->theorem2_lambda_lower;
  } else {
    out.theorem1_rhs = theorem1_rhs(out.entropy, out.lambda_used, 0.0, code.locality, code.logical_qubits);
    out.theorem2_lambda_lower =
        theorem2_lambda_lower(report.epsilon_code, code.locality, code.logical_qubits, out.entropy, 0.0);
  }
  out.theorem2_vacuous = !out.theorem2_lambda_lower.has_value();
  out.theorem1_slack = report.epsilon_code / out.theorem1_rhs;
  out.theorem2_slack = out.theorem2_lambda_lower ? *out.theorem2_lambda_lower / out.lambda_used : 0.0;
  out.chaos_slack = std::isfinite(out.chaos_bound_value) ? out.lambda_used / out.chaos_bound_value : 0.0;
  out.theorem1_within_slack = std::all_of(out.pairs.begin(), out.pairs.end(),
                                          [](const PairBound& p) { return p.theorem1_within_slack; }) &&
                              out.theorem1_slack <= in.slack;
  out.theorem2_within_slack = std::all_of(out.pairs.begin(), out.pairs.end(),
                                          [](const PairBound& p) { return p.theorem2_within_slack; });
  out.chaos_bound_within_slack = out.chaos_slack <= in.slack;
  return out;
}

}  // namespace ethlab
