#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ethlab/spectral_core.hpp"

namespace ethlab {

enum class Boundary { open, periodic };

/// Mixed-field Ising chain
///   H = sum_bonds J Z_i Z_{i+1} + sum_i (hx X_i + hz Z_i) + edge_field Z_0.
///
/// The defaults sit at the standard nonintegrable point. The open chain with
/// uniform fields is reflection symmetric, which splits the spectrum into two
/// independent parity sectors; the small edge field on site 0 removes that
/// symmetry so level statistics are those of a single GOE block.
struct SpinChainParams {
  int sites = 10;
  double coupling = 1.0;
  double transverse_field = 0.9045;
  double longitudinal_field = 0.8090;
  double edge_field = 0.25;
  Boundary boundary = Boundary::open;
};

inline constexpr int kMaxSites = 13;

enum class Pauli { X, Y, Z };

/// Pauli word on the listed sites. `word` holds one letter per support site.
struct LocalObservableSpec {
  std::vector<int> support;
  std::vector<Pauli> word;
  /// Subtract Tr(rho_beta A) * I using the thermal context passed to
  /// build_local_observable.
  bool traceless_shift = false;

  /// Parses e.g. ("ZZ", {0, 1}).
  static LocalObservableSpec parse(const std::string& letters, std::vector<int> support);
  /// True when the support is a run of consecutive sites.
  bool contiguous() const;
};

/// Thermal state used for the traceless shift.
struct ThermalContext {
  const EnergySpectrum* spectrum = nullptr;
  double beta = 0.0;
};

/// Observable matrix in the energy eigenbasis, A_mn = <E_m|A|E_n>.
class OperatorEigenbasis {
 public:
  explicit OperatorEigenbasis(ComplexMatrix entries);

  Index dim() const noexcept { return entries_.rows(); }
  const ComplexMatrix& entries() const noexcept { return entries_; }
  std::complex<double> operator()(Index m, Index n) const { return entries_(m, n); }

 private:
  ComplexMatrix entries_;
};

HamiltonianMatrix build_mixed_field_ising(const SpinChainParams& params);

/// Embeds the Pauli word with identities elsewhere. Site 0 is the most
/// significant bit of the computational-basis index; |0> has Z = +1.
HamiltonianMatrix build_local_observable(const LocalObservableSpec& spec, int sites,
                                         std::optional<ThermalContext> thermal = std::nullopt);

/// A_mn = (V^dagger op V)_mn.
OperatorEigenbasis to_eigenbasis(const HamiltonianMatrix& op, const EnergySpectrum& spectrum);

}  // namespace ethlab
