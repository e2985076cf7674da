#include "ethlab/model_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ethlab/errors.hpp"

namespace ethlab {

namespace {

using Complex = std::complex<double>;

bool bit_set(Index state, int site, int sites) {
  return ((state >> (sites - 1 - site)) & 1) != 0;
}

double z_value(Index state, int site, int sites) { return bit_set(state, site, sites) ? -1.0 : 1.0; }

bool is_scalar_matrix(const ComplexMatrix& a) {
  const Complex c = a(0, 0);
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) != (i == j ? c : Complex(0.0))) return false;
    }
  }
  return true;
}

}  // namespace

LocalObservableSpec LocalObservableSpec::parse(const std::string& letters,
                                               std::vector<int> support) {
  LocalObservableSpec spec;
  spec.support = std::move(support);
  for (const char c : letters) {
    switch (c) {
      case 'X': case 'x': spec.word.push_back(Pauli::X); break;
      case 'Y': case 'y': spec.word.push_back(Pauli::Y); break;
      case 'Z': case 'z': spec.word.push_back(Pauli::Z); break;
      default: throw ValidationError(std::string("unknown Pauli letter '") + c + "'");
    }
  }
  if (spec.word.size() != spec.support.size()) {
    throw ValidationError("Pauli word length does not match support size");
  }
  return spec;
}

bool LocalObservableSpec::contiguous() const {
  if (support.empty()) return true;
  std::vector<int> sorted = support;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] != sorted[i - 1] + 1) return false;
  }
  return true;
}

OperatorEigenbasis::OperatorEigenbasis(ComplexMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw ValidationError("operator matrix must be square");
  }
}

HamiltonianMatrix build_mixed_field_ising(const SpinChainParams& p) {
  if (p.sites < 2 || p.sites > kMaxSites) {
    throw ValidationError("spin chain needs 2 <= N <= " + std::to_string(kMaxSites) +
                          ", got N = " + std::to_string(p.sites));
  }
  const int n = p.sites;
  const Index dim = Index{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  const bool wrap = p.boundary == Boundary::periodic && n > 2;
  for (Index s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (int i = 0; i + 1 < n; ++i) diag += p.coupling * z_value(s, i, n) * z_value(s, i + 1, n);
    if (wrap) diag += p.coupling * z_value(s, n - 1, n) * z_value(s, 0, n);
    for (int i = 0; i < n; ++i) diag += p.longitudinal_field * z_value(s, i, n);
    diag += p.edge_field * z_value(s, 0, n);
    h(s, s) = diag;
    for (int i = 0; i < n; ++i) {
      const Index flipped = s ^ (Index{1} << (n - 1 - i));
      h(flipped, s) += p.transverse_field;
    }
  }
  return HamiltonianMatrix(std::move(h));
}

HamiltonianMatrix build_local_observable(const LocalObservableSpec& spec, int sites,
                                         std::optional<ThermalContext> thermal) {
  if (sites < 1 || sites > kMaxSites) {
    throw ValidationError("observable needs 1 <= N <= " + std::to_string(kMaxSites));
  }
  if (spec.word.size() != spec.support.size()) {
    throw ValidationError("Pauli word length does not match support size");
  }
  if (static_cast<int>(spec.support.size()) > sites) {
    throw ValidationError("observable support larger than the chain");
  }
  std::vector<int> seen;
  for (const int site : spec.support) {
    if (site < 0 || site >= sites) {
      throw ValidationError("site index " + std::to_string(site) + " out of range for N = " +
                            std::to_string(sites));
    }
    if (std::find(seen.begin(), seen.end(), site) != seen.end()) {
      throw ValidationError("duplicate site " + std::to_string(site) + " in support");
    }
    seen.push_back(site);
  }

  const Index dim = Index{1} << sites;
  Index flip_mask = 0;
  for (std::size_t k = 0; k < spec.support.size(); ++k) {
    if (spec.word[k] != Pauli::Z) flip_mask |= Index{1} << (sites - 1 - spec.support[k]);
  }
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (Index s = 0; s < dim; ++s) {
    Complex phase = 1.0;
    for (std::size_t k = 0; k < spec.support.size(); ++k) {
      const bool one = bit_set(s, spec.support[k], sites);
      switch (spec.word[k]) {
        case Pauli::X: break;
        case Pauli::Y: phase *= one ? Complex(0.0, -1.0) : Complex(0.0, 1.0); break;
        case Pauli::Z: if (one) phase = -phase; break;
      }
    }
    a(s ^ flip_mask, s) = phase;
  }

  if (spec.traceless_shift) {
    if (!thermal || thermal->spectrum == nullptr) {
      throw ValidationError("traceless shift requires a thermal context");
    }
    const EnergySpectrum& spec_e = *thermal->spectrum;
    if (spec_e.dim() != dim) throw ValidationError("thermal context dimension mismatch");
    const RealVector& e = spec_e.eigenvalues();
    const double shift = -thermal->beta * e.minCoeff();
    RealVector w = (-thermal->beta * e.array() - shift).exp();
    w /= w.sum();
    const OperatorEigenbasis in_eigen = to_eigenbasis(HamiltonianMatrix(a), spec_e);
    Complex trace = 0.0;
    for (Index n = 0; n < dim; ++n) trace += w(n) * in_eigen(n, n);
    a.diagonal().array() -= trace.real();
  }
  return HamiltonianMatrix(std::move(a));
}

OperatorEigenbasis to_eigenbasis(const HamiltonianMatrix& op, const EnergySpectrum& spectrum) {
  if (op.dim() != spectrum.dim()) {
    throw ValidationError("operator dimension " + std::to_string(op.dim()) +
                          " does not match spectrum dimension " + std::to_string(spectrum.dim()));
  }
  const ComplexMatrix* basis = spectrum.stored_basis();
  if (basis == nullptr) return OperatorEigenbasis(op.entries());
  // Scalar operators are basis independent; return them untouched.
  const ComplexMatrix& a = op.entries();
  if (is_scalar_matrix(a)) return OperatorEigenbasis(a);
  ComplexMatrix out;
  if (op.is_real() && basis->imag().isZero(0.0)) {
    const RealMatrix v = basis->real();
    const RealMatrix av = a.real() * v;
    RealMatrix product = v.transpose() * av;
    product = 0.5 * (product + product.transpose()).eval();
    out = product.cast<Complex>();
  } else {
    const ComplexMatrix av = a * (*basis);
    out = basis->adjoint() * av;
    out = 0.5 * (out + out.adjoint()).eval();
  }
  return OperatorEigenbasis(std::move(out));
}

}  // namespace ethlab
