#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <doctest.h>

#include "ethlab/errors.hpp"
#include "ethlab/spectral_core.hpp"
#include "oracles.hpp"

using namespace ethlab;

namespace {

double eigen_residual(const ComplexMatrix& h, const EnergySpectrum& s) {
  const ComplexMatrix v = s.basis();
  return (h * v - v * s.eigenvalues().cast<std::complex<double>>().asDiagonal()).norm() / h.norm();
}

double orthonormality(const EnergySpectrum& s) {
  const ComplexMatrix v = s.basis();
  return (v.adjoint() * v - ComplexMatrix::Identity(s.dim(), s.dim())).norm();
}

}  // namespace

TEST_SUITE("spectral_core") {

TEST_CASE("Hermitian validation") {
  ComplexMatrix m = oracle::random_hermitian(16, 1);
  CHECK_NOTHROW(HermitianMatrix{m});
  CHECK_FALSE(HermitianMatrix(m).is_real());
  CHECK(HermitianMatrix(oracle::random_symmetric(16, 1)).is_real());

  ComplexMatrix bad = m;
  bad(2, 5) += std::complex<double>(1e-6, 0.0);
  CHECK_THROWS_AS(HermitianMatrix{bad}, ValidationError);
  CHECK_THROWS_AS(HermitianMatrix{ComplexMatrix(3, 4)}, ValidationError);
  CHECK_THROWS_AS(HermitianMatrix{ComplexMatrix(0, 0)}, ValidationError);

  // Deviations below the relative tolerance are accepted.
  ComplexMatrix tiny = m;
  tiny(2, 5) += std::complex<double>(1e-15, 0.0);
  CHECK_NOTHROW(HermitianMatrix{tiny});
}

TEST_CASE("backend resolution") {
  CHECK(resolve_backend(EigenBackend::eigen) == EigenBackend::eigen);
  CHECK(resolve_backend(EigenBackend::lapack) == EigenBackend::lapack);
  const EigenBackend automatic = resolve_backend(EigenBackend::automatic);
  CHECK(automatic == (lapack_gemm_healthy() ? EigenBackend::lapack : EigenBackend::eigen));
  CHECK(to_string(EigenBackend::eigen) == "eigen");
  CHECK(to_string(EigenBackend::lapack) == "lapack");
}

TEST_CASE("eigendecomposition, both backends, complex and real") {
  for (const bool real : {false, true}) {
    const ComplexMatrix h = real ? oracle::random_symmetric(128, 3) : oracle::random_hermitian(128, 3);
    const HermitianMatrix hm(h);
    const EnergySpectrum a = eigendecompose(hm, EigenBackend::eigen);
    CAPTURE(real);
    CHECK(eigen_residual(h, a) < 1e-13);
    CHECK(orthonormality(a) < 1e-12);
    for (Index n = 1; n < a.dim(); ++n) REQUIRE(a.energy(n) >= a.energy(n - 1));
    CHECK(std::abs(a.eigenvalues().sum() - h.trace().real()) < 1e-10);
    if (real) CHECK(a.basis().imag().isZero(0.0));

    if (!lapack_gemm_healthy()) {
      // A BLAS that fails its self-check is never used for eigensolves.
      CHECK_THROWS_AS(eigendecompose(hm, EigenBackend::lapack), NumericError);
      continue;
    }
    const EnergySpectrum b = eigendecompose(hm, EigenBackend::lapack);
    CHECK(eigen_residual(h, b) < 1e-13);
    CHECK(orthonormality(b) < 1e-12);
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("automatic backend at a size where broken gemm kernels show up") {
  const ComplexMatrix h = oracle::random_symmetric(300, 4);
  const EnergySpectrum s = eigendecompose(HermitianMatrix(h));
  CHECK(eigen_residual(h, s) < 1e-12);
  CHECK(orthonormality(s) < 1e-11);
}

TEST_CASE("spectrum invariants") {
  RealVector e(4);
  e << 0.0, 1.0, 3.0, 6.0;
  const EnergySpectrum s(e);
  CHECK(s.has_identity_basis());
  CHECK(s.stored_basis() == nullptr);
  CHECK(s.basis().isIdentity(0.0));
  CHECK(s.bandwidth() == 6.0);
  RealVector unsorted(3);
  unsorted << 1.0, 0.0, 2.0;
  CHECK_THROWS_AS(EnergySpectrum{unsorted}, ValidationError);
  CHECK_THROWS_AS(EnergySpectrum(e, ComplexMatrix::Identity(3, 3)), ValidationError);

  // Copies share the stored basis.
  const EnergySpectrum withb(e, ComplexMatrix::Identity(4, 4));
  const EnergySpectrum copy = withb;
  CHECK(copy.stored_basis() == withb.stored_basis());
}

TEST_CASE("entropy of an evenly spaced spectrum is -log(spacing)") {
  const Index d = 2000;
  const double spacing = 0.01;
  RealVector e(d);
  for (Index n = 0; n < d; ++n) e(n) = spacing * static_cast<double>(n);
  const EnergySpectrum s(e);
  CHECK(s.bulk_level_spacing() == doctest::Approx(spacing).epsilon(1e-12));
  const EntropyModel m = entropy_model(s, 0.2);
  for (const double x : {5.0, 10.0, 15.0}) {
    CHECK(m.entropy(x) == doctest::Approx(-std::log(spacing)).epsilon(1e-6));
    CHECK(std::abs(m.beta(x)) < 1e-6);
  }
  CHECK_THROWS_AS(entropy_model(s, 0.02), ValidationError);
  CHECK_THROWS_AS(entropy_model(s, 0.0), ValidationError);

  const EntropyModel c = EntropyModel::constant(3.5, 0.0, 1.0);
  CHECK(c.entropy(-10.0) == 3.5);
  CHECK(c.entropy(0.4) == 3.5);
  CHECK(c.beta(0.4) == 0.0);
}

TEST_CASE("entropy slope of a Gaussian density of states") {
  // rho(E) ~ exp(-E^2 / 2 s^2) gives beta(E) = -E / s^2 in the bulk.
  const Index d = 200000;
  const double sd = 1.0;
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (auto& x : v) x = n(gen);
  std::sort(v.begin(), v.end());
  const EnergySpectrum s(Eigen::Map<RealVector>(v.data(), d));
  const EntropyModel m = entropy_model(s, 0.2);
  CHECK(m.beta(0.8) == doctest::Approx(-0.8 / (1 + 0.2 * 0.2)).epsilon(0.1));
  CHECK(std::abs(m.peak_energy()) < 0.15);
}

TEST_CASE("microcanonical windows") {
  RealVector e(6);
  e << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
  const EnergySpectrum s(e);
  const MicrocanonicalWindow w = microcanonical_window(s, 2.5, 1.0);
  CHECK(w.first == 2);
  CHECK(w.last == 4);
  CHECK(w.size() == 2);
  CHECK(w.contains(3));
  CHECK_FALSE(w.contains(4));
  CHECK(microcanonical_window(s, 2.0, 1.0).size() == 3);
  CHECK_THROWS_AS(microcanonical_window(s, 2.5, 0.25), EmptyWindowError);
  CHECK_THROWS_AS(microcanonical_window(s, 2.5, 0.0), ValidationError);
}

TEST_CASE("level spacing ratio: Poisson and GOE reference values") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index d = 200000;
  std::vector<double> v(static_cast<std::size_t>(d));
  for (auto& x : v) x = u(gen);
  std::sort(v.begin(), v.end());
  const double poisson = level_spacing_ratio(Eigen::Map<RealVector>(v.data(), d));
  CHECK(poisson == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(0.01));

  const EnergySpectrum goe = eigendecompose(HermitianMatrix(oracle::random_symmetric(1000, 5)));
  CHECK(level_spacing_ratio(goe.eigenvalues()) == doctest::Approx(0.5307).epsilon(0.05));

  RealVector flat = RealVector::Constant(10, 1.0);
  CHECK_THROWS_AS(level_spacing_ratio(flat), ValidationError);
}

}
