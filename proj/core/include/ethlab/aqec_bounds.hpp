#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ethlab/eth_extract.hpp"
#include "ethlab/model_lab.hpp"
#include "ethlab/spectral_core.hpp"

namespace ethlab {

/// Eigenstate code: span of 2^k eigenstates inside a microcanonical window,
/// protecting against errors on d consecutive qubits out of N.
struct CodeSpec {
  std::vector<Index> members;
  int logical_qubits = 1;
  int locality = 1;
  int physical_qubits = 1;
  MicrocanonicalWindow window;

  /// Throws ValidationError unless the invariants hold.
  void validate() const;
};

enum class CodeSelection { nearest_center, random_in_window };

/// Picks 2^k members of the window: the states nearest its center, or a
/// seeded random subset.
CodeSpec select_code(const EnergySpectrum& spectrum, const MicrocanonicalWindow& window,
                     int logical_qubits, int locality, int physical_qubits,
                     CodeSelection selection = CodeSelection::nearest_center,
                     std::uint64_t seed = 0);

struct KlResidualReport {
  CodeSpec code;
  double c_a = 0.0;
  /// max - min of <E_i|A^dagger A|E_i> over members.
  double diagonal_spread = 0.0;
  ComplexMatrix epsilon;
  double epsilon_max = 0.0;
  double epsilon_code = 0.0;
  /// omega_ij = E_i - E_j per member pair.
  RealMatrix omega;
  double mean_energy = 0.0;
};

/// epsilon_ij = sum_k conj(A_ki) A_kj - C_A delta_ij over code members with
/// C_A the mean diagonal value, and epsilon_code = 2^{d+2k} sqrt(epsilon_max).
KlResidualReport kl_residuals(const OperatorEigenbasis& a, const EnergySpectrum& spectrum,
                              const CodeSpec& code);

/// Which exponent the code-error bound uses. `stated` is pi|omega|/(2 lambda);
/// `intermediate` is the pi|omega|/(4 lambda) that the square-root step of the
/// derivation produces before it is restated.
enum class Theorem1Form { stated, intermediate };

/// 2^{d+2k} exp(-S/4 - pi|omega|/(2 lambda)).
double theorem1_rhs(double entropy, double rate, double omega, int locality, int logical_qubits,
                    Theorem1Form form = Theorem1Form::stated);

/// pi|omega| / (2 ln(2^{d+2k}/epsilon_code) - S/2), or nullopt when the
/// denominator is not positive (vacuous bound).
std::optional<double> theorem2_lambda_lower(double epsilon_code, int locality, int logical_qubits,
                                            double entropy, double omega);

enum class LambdaSource { automatic, fitted, envelope, chaos_bound };

std::string to_string(LambdaSource source);

struct PairBound {
  Index i = 0;
  Index j = 0;
  double omega = 0.0;
  double theorem1_rhs = 0.0;
  std::optional<double> theorem2_lambda_lower;
  /// epsilon_code / theorem1_rhs.
  double theorem1_slack = 0.0;
  bool theorem1_within_slack = true;
  bool theorem2_within_slack = true;
};

struct BoundInputs {
  double beta = 1.0;
  LambdaSource source = LambdaSource::automatic;
  /// Valid OTOC fit, when one exists.
  std::optional<double> fitted_rate;
  /// Used in place of the envelope's gamma_hat when no EnvelopeModel is passed.
  std::optional<double> envelope_decay_rate;
  double slack = 10.0;
  /// Time-scale metadata carried into the report; no gating is applied.
  std::optional<double> dissipation_time;
  std::optional<double> scrambling_time;
};

struct BoundReport {
  double entropy = 0.0;
  double beta = 0.0;
  double lambda_used = 0.0;
  LambdaSource lambda_source = LambdaSource::chaos_bound;
  double chaos_bound_value = 0.0;
  double slack = 10.0;
  double epsilon_code = 0.0;

  /// Values at the largest-|omega| pair.
  double max_omega = 0.0;
  double theorem1_rhs = 0.0;
  std::optional<double> theorem2_lambda_lower;
  bool theorem2_vacuous = false;

  double theorem1_slack = 0.0;  ///< epsilon_code / theorem1_rhs
  double theorem2_slack = 0.0;  ///< lambda_lower / lambda_used
  double chaos_slack = 0.0;     ///< lambda_used / (2 pi / beta)

  bool theorem1_within_slack = true;
  bool theorem2_within_slack = true;
  bool chaos_bound_within_slack = true;

  std::vector<PairBound> pairs;
  std::optional<double> dissipation_time;
  std::optional<double> scrambling_time;

  bool all_within_slack() const noexcept {
    return theorem1_within_slack && theorem2_within_slack && chaos_bound_within_slack;
  }
};

/// Resolves lambda (fitted > envelope-implied pi/(2 gamma_hat) > 2 pi/beta
/// under `automatic`) and evaluates the code-error sandwich.
BoundReport check_bounds(const KlResidualReport& report, const EnvelopeModel* envelope,
                         const EntropyModel& entropy, const BoundInputs& inputs);

}  // namespace ethlab
