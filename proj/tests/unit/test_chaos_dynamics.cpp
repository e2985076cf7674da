#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "ethlab/chaos_dynamics.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/eth_synth.hpp"
#include "ethlab/model_lab.hpp"
#include "oracles.hpp"

using namespace ethlab;

namespace {

struct Chain {
  HamiltonianMatrix h;
  EnergySpectrum spectrum;
  HamiltonianMatrix op;
  OperatorEigenbasis a;
};

Chain chain(int sites, const char* word = "Z", std::vector<int> support = {0}) {
  SpinChainParams p;
  p.sites = sites;
  HamiltonianMatrix h = build_mixed_field_ising(p);
  EnergySpectrum s = eigendecompose(h);
  HamiltonianMatrix op = build_local_observable(LocalObservableSpec::parse(word, std::move(support)), sites);
  OperatorEigenbasis a = to_eigenbasis(op, s);
  return {std::move(h), std::move(s), std::move(op), std::move(a)};
}

CorrelatorSeries synthetic_otoc(double rate, double ts, const std::vector<double>& times,
                                double noise = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  CorrelatorSeries s;
  s.kind = CorrelatorKind::otoc;
  s.times = times;
  for (const double t : times) s.values.emplace_back(1.0 - std::exp(rate * (t - ts)) + noise * n(gen), 0.0);
  return s;
}

}  // namespace

TEST_SUITE("chaos_dynamics") {

TEST_CASE("thermal weights") {
  const Chain c = chain(5);
  const ThermalState th = thermal_state(c.spectrum, 1.3);
  CHECK(th.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  const ComplexMatrix rho = oracle::gibbs_power(c.h.entries(), 1.3, 1.0);
  CHECK(th.mean_energy(c.spectrum) == doctest::Approx((rho * c.h.entries()).trace().real()).epsilon(1e-12));
  CHECK((th.power(0.5).array().square() - th.weights.array()).abs().maxCoeff() < 1e-15);
  const ThermalState inf = thermal_state(c.spectrum, 0.0);
  CHECK(inf.weights(0) == 1.0 / 32.0);
  CHECK(inf.power(0.25)(3) == doctest::Approx(std::pow(2.0, -1.25)).epsilon(1e-15));
  CHECK_THROWS_AS(thermal_state(c.spectrum, -1.0), ValidationError);
  // Large beta does not overflow.
  const ThermalState cold = thermal_state(c.spectrum, 500.0);
  CHECK(cold.weights(0) == doctest::Approx(1.0));
}

TEST_CASE("correlators agree with direct Heisenberg evolution") {
  const Chain c = chain(6, "X", {2});
  const std::vector<double> times = uniform_grid(0.0, 3.0, 7);
  for (const double beta : {0.0, 0.6}) {
    const oracle::DirectCorrelators ref = oracle::direct_correlators(c.h.entries(), c.op.entries(), beta, times);
    const auto f2 = two_point(c.a, c.spectrum, beta, times);
    const auto [fs, rs] = symmetric_and_response(c.a, c.spectrum, beta, times);
    const auto ot = otoc(c.a, c.spectrum, beta, times);
    CAPTURE(beta);
    CHECK(oracle::series_rel_diff(f2.values, ref.f2) < 1e-10);
    CHECK(oracle::series_rel_diff(fs.values, ref.fsym) < 1e-10);
    if (beta == 0.0) {
      // The response vanishes at infinite temperature; only roundoff is left.
      for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(std::abs(rs.values[i]) < 1e-12);
        CHECK(std::abs(ref.resp[i]) < 1e-12);
      }
    } else {
      CHECK(oracle::series_rel_diff(rs.values, ref.resp) < 1e-10);
    }
    CHECK(oracle::series_rel_diff(ot.values, ref.otoc) < 1e-10);
    CHECK(f2.regulator_exponent == 0.5);
    CHECK(ot.regulator_exponent == 0.25);
    for (const auto& v : rs.values) CHECK(v.real() == 0.0);
  }
}

TEST_CASE("beta = 0 reductions") {
  const Chain c = chain(5);
  const std::vector<double> times = uniform_grid(0.0, 2.0, 5);
  const auto f2 = two_point(c.a, c.spectrum, 0.0, times);
  const auto [fs, rs] = symmetric_and_response(c.a, c.spectrum, 0.0, times);
  // At infinite temperature rho^{1/2} A rho^{1/2} = rho A, so F2 = <A(t) A> = Fsym + <A>^2.
  const double mean = c.a.entries().diagonal().real().mean();
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(f2.values[i].real() == doctest::Approx(fs.values[i].real() + mean * mean).epsilon(1e-12));
  }
  // The symmetric and response parts at t = 0: <A^2> - <A>^2 and 0.
  CHECK(fs.values[0].real() == doctest::Approx(1.0 - mean * mean).epsilon(1e-12));
  CHECK(std::abs(rs.values[0].imag()) < 1e-14);

  // Pauli word in an exact basis: OTOC(0) = Tr(A^4) / D = 1 exactly.
  RealVector e(32);
  for (Index n = 0; n < 32; ++n) e(n) = 0.1 * static_cast<double>(n);
  const EnergySpectrum flat(e);
  for (const char* w : {"X", "Y", "Z"}) {
    const OperatorEigenbasis p = to_eigenbasis(build_local_observable(LocalObservableSpec::parse(w, {1}), 5), flat);
    CHECK(otoc(p, flat, 0.0, {0.0}).values[0] == std::complex<double>(1.0, 0.0));
  }
}

TEST_CASE("OTOC cost guard") {
  const Chain c = chain(5);
  OtocOptions opts;
  opts.max_dim = 16;
  try {
    otoc(c.a, c.spectrum, 1.0, {0.0, 1.0}, opts);
    FAIL("expected CostGuardError");
  } catch (const CostGuardError& e) {
    CHECK(e.estimated_flops() == doctest::Approx(8.0 * 32 * 32 * 32 * 2));
  }
}

TEST_CASE("non-Hermitian input is caught by the reality check") {
  const Chain c = chain(4);
  ComplexMatrix m = c.a.entries();
  m(0, 1) += std::complex<double>(0.0, 0.3);
  CHECK_THROWS_AS(two_point(OperatorEigenbasis(m), c.spectrum, 0.5, {0.0, 1.0}), NumericError);
}

TEST_CASE("Lehmann peaks: FDT, parity and sum rule") {
  const Chain c = chain(6);
  const double beta = 0.8;
  const auto peaks = lehmann_peaks(c.a, c.spectrum, beta);
  CHECK(peaks.size() == 64 * 63 + 1);
  CHECK(fdt_peak_deviation(peaks, beta, FdtRelation::kubo) < 1e-10);
  CHECK(fdt_peak_deviation(peaks, beta, FdtRelation::as_stated) == doctest::Approx(3.0).epsilon(1e-9));

  // Total F weight is Fsym(0); total rho weight vanishes.
  double fsum = 0.0, rsum = 0.0;
  for (const auto& p : peaks) {
    fsum += p.fluctuation;
    rsum += p.response;
  }
  const auto [fs, rs] = symmetric_and_response(c.a, c.spectrum, beta, {0.0});
  CHECK(fsum == doctest::Approx(fs.values[0].real()).epsilon(1e-12));
  CHECK(std::abs(rsum) < 1e-13);

  const std::vector<double> grid = uniform_grid(-30.0, 30.0, 1201);
  const SpectralDensity sd = spectral_densities(c.a, c.spectrum, beta, 0.2, grid);
  double fint = 0.0;
  for (const double f : sd.fluctuation) fint += f * 0.05;
  CHECK(fint == doctest::Approx(fsum).epsilon(1e-6));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t j = grid.size() - 1 - i;
    CHECK(sd.response[i] == doctest::Approx(-sd.response[j]).epsilon(1e-10));
    CHECK(sd.fluctuation[i] == doctest::Approx(sd.fluctuation[j]).epsilon(1e-10));
  }
  const FdtResult kubo = fdt_check(sd, 0.05, FdtRelation::kubo);
  const FdtResult stated = fdt_check(sd, 0.05, FdtRelation::as_stated);
  CHECK(kubo.admissible_points > 0);
  CHECK(kubo.max_deviation < stated.max_deviation);
  CHECK(stated.max_deviation > 2.0);

  std::ostringstream csv;
  sd.write_csv(csv);
  CHECK(csv.str().rfind("omega,F,rho\n", 0) == 0);
}

TEST_CASE("FDT check at beta = 0 and sigma validation") {
  const Chain c = chain(5);
  const std::vector<double> grid = uniform_grid(-4.0, 4.0, 81);
  const SpectralDensity sd = spectral_densities(c.a, c.spectrum, 0.0, 0.2, grid);
  const FdtResult r = fdt_check(sd, 0.05);
  CHECK(r.beta_zero);
  CHECK(r.empty);
  for (const double x : sd.response) CHECK(x == 0.0);
  CHECK_THROWS_AS(spectral_densities(c.a, c.spectrum, 1.0, 1e-6, grid), ValidationError);
  CHECK_THROWS_AS(spectral_densities(c.a, c.spectrum, 1.0, 0.0, grid), ValidationError);
  CHECK_THROWS_AS(spectral_densities(c.a, c.spectrum, 1.0, 0.2, {1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(fdt_peak_deviation({}, 0.0), ValidationError);

  RealVector e(3);
  e << 0.0, 1.0, 3.0;
  // Ordered pairs with E_n - E_m in [-1.5, 1.5]: (0,1) and (1,0).
  CHECK(transition_spacing(EnergySpectrum(e), -1.5, 1.5) == doctest::Approx(1.5));
}

TEST_CASE("plateau and dissipation time") {
  const Chain c = chain(6);
  const std::vector<double> times = uniform_grid(0.0, 5.0, 201);
  const auto f2 = two_point(c.a, c.spectrum, 0.5, times);
  const double plateau = two_point_plateau(c.a, c.spectrum, 0.5);
  const auto td = dissipation_time(f2, plateau);
  REQUIRE(td);
  CHECK(*td > 0.0);
  CHECK(*td < 5.0);

  CorrelatorSeries flat;
  flat.times = {0.0, 1.0};
  flat.values = {{2.0, 0.0}, {2.0, 0.0}};
  CHECK_FALSE(dissipation_time(flat, 2.0));
  // Linear decay from 1 to 0 over [0, 1] crosses 1/e at 1 - 1/e.
  CorrelatorSeries lin;
  lin.times = {0.0, 1.0};
  lin.values = {{1.0, 0.0}, {0.0, 0.0}};
  CHECK(*dissipation_time(lin, 0.0) == doctest::Approx(1.0 - 1.0 / std::numbers::e));
}

TEST_CASE("Lyapunov fits on synthetic OTOCs") {
  const std::vector<double> times = uniform_grid(0.0, 9.0, 91);
  const auto clean = synthetic_otoc(0.7, 12.0, times);
  const LyapunovFit fit = fit_lyapunov(clean, 1.0, 0.0, 1.0, 8.0);
  CHECK(std::abs(fit.rate - 0.7) < 1e-10);
  CHECK(fit.scrambling_time == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(fit.residual_norm < 1e-10);
  CHECK(fit.points == 71);
  CHECK(fit.dissipation_time == 0.0);
  CHECK(fit.reliability == FitReliability::high);

  const LyapunovFit graded = fit_lyapunov(clean, 1.0, 0.0, 1.0, 8.0, 2.0);
  CHECK(graded.reliability == FitReliability::moderate);
  CHECK(fit_lyapunov(clean, 1.0, 0.0, 1.0, 8.0, 5.0).reliability == FitReliability::low);

  // Normalization by F2(0)^2 + epsilon_reg.
  CorrelatorSeries scaled = clean;
  for (auto& v : scaled.values) v *= 4.0;
  CHECK(std::abs(fit_lyapunov(scaled, 2.0, 0.0, 1.0, 8.0).rate - 0.7) < 1e-10);
  CHECK(std::abs(fit_lyapunov(scaled, 1.0, 3.0, 1.0, 8.0).rate - 0.7) < 1e-10);

  const auto noisy = synthetic_otoc(1.0, 10.0, uniform_grid(0.0, 9.0, 901), 1e-3, 4);
  CHECK(fit_lyapunov(noisy, 1.0, 0.0, 6.0, 9.0).rate == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Lyapunov fit rejections") {
  const std::vector<double> times = uniform_grid(0.0, 9.0, 91);
  auto reason = [](auto&& fn) {
    try {
      fn();
    } catch (const FitRejectedError& e) {
      return static_cast<int>(e.reason());
    }
    return -1;
  };
  CorrelatorSeries flat = synthetic_otoc(0.7, 12.0, times);
  for (auto& v : flat.values) v = {0.5, 0.0};
  CHECK(reason([&] { fit_lyapunov(flat, 1.0, 0.0, 1.0, 8.0); }) == static_cast<int>(FitRejection::non_growing));

  CorrelatorSeries over = flat;
  for (auto& v : over.values) v = {1.5, 0.0};
  CHECK(reason([&] { fit_lyapunov(over, 1.0, 0.0, 1.0, 8.0); }) == static_cast<int>(FitRejection::nonpositive_gap));

  const auto early = synthetic_otoc(0.7, 2.0, times);
  CHECK(reason([&] { fit_lyapunov(synthetic_otoc(0.7, 12.0, times), 1.0, 0.0, 1.0, 8.0, 13.0); }) ==
        static_cast<int>(FitRejection::hierarchy));
  // t_s = 2 lies inside the fit window.
  CorrelatorSeries past;
  past.times = times;
  for (const double t : times) past.values.emplace_back(1.0 - std::exp(0.7 * (t - 2.0)), 0.0);
  CHECK(reason([&] { fit_lyapunov(past, 1.0, 0.0, 1.0, 8.0); }) == static_cast<int>(FitRejection::hierarchy));

  CHECK_THROWS_AS(fit_lyapunov(early, 1.0, 0.0, 1.0, 1.05), EmptyWindowError);
  CHECK_THROWS_AS(fit_lyapunov(early, 1.0, 0.0, 1.0, 20.0), ValidationError);
  CHECK_THROWS_AS(fit_lyapunov(early, 1.0, 0.0, 2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(fit_lyapunov(early, 0.0, 0.0, 1.0, 2.0), ValidationError);
  CHECK_THROWS_AS(fit_lyapunov(early, 1.0, -1.0, 1.0, 2.0), ValidationError);
}

TEST_CASE("pure states and the dynamical fluctuation") {
  const Chain c = chain(6);
  CHECK_THROWS_AS(PureStateCoefficients(ComplexVector::Ones(4)), ValidationError);
  const auto psi = PureStateCoefficients::gaussian_packet(c.spectrum, 0.0, 1.0, 3);
  CHECK(psi.coefficients().squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
  const auto again = PureStateCoefficients::gaussian_packet(c.spectrum, 0.0, 1.0, 3);
  CHECK(psi.coefficients() == again.coefficients());

  // Matrix elements rebuilt from the eigenvectors one pair at a time.
  const ComplexMatrix v = c.spectrum.basis();
  double ref = 0.0;
  for (Index m = 0; m < 64; ++m) {
    for (Index n = 0; n < 64; ++n) {
      if (m == n) continue;
      const std::complex<double> amn = (v.col(m).adjoint() * c.op.entries() * v.col(n)).value();
      ref += std::norm(psi.coefficients()(m)) * std::norm(psi.coefficients()(n)) * std::norm(amn);
    }
  }
  CHECK(dynamical_fluctuation(c.a, psi) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("dynamical fluctuation equals the long-time variance") {
  const Chain c = chain(6);
  const auto psi = PureStateCoefficients::gaussian_packet(c.spectrum, -2.0, 1.5, 2);
  const ComplexVector phi = c.spectrum.basis() * psi.coefficients();
  const double direct = oracle::long_time_variance(c.h.entries(), c.op.entries(), phi, 4000.0, 0.1);
  CHECK(dynamical_fluctuation(c.a, psi) == doctest::Approx(direct).epsilon(0.05));
}

TEST_CASE("static fluctuation of an eigenstate") {
  const Chain c = chain(6, "X", {3});
  for (const Index n : {0, 10, 40}) {
    // X^2 = 1, so sum_m |A_mn|^2 = 1 and the off-diagonal part is 1 - A_nn^2.
    CHECK(static_fluctuation(c.a, n) == doctest::Approx(1.0 - std::norm(c.a(n, n))).epsilon(1e-12));
    CHECK(static_fluctuation_variance(c.a, n) == doctest::Approx(static_fluctuation(c.a, n)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(static_fluctuation(c.a, 64), ValidationError);
}

TEST_CASE("static fluctuation integral against quadrature") {
  CHECK(static_fluct_integral(std::numbers::pi, 1.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  for (const double rate : {0.3, 1.0, 2.5, 5.0}) {
    for (const double beta : {0.0, 0.5, 1.0, 2.0}) {
      if (std::numbers::pi / rate <= beta / 2) continue;
      CAPTURE(rate);
      CAPTURE(beta);
      CHECK(static_fluct_integral(rate, beta) ==
            doctest::Approx(oracle::static_integral_quadrature(rate, beta)).epsilon(1e-9));
    }
  }
  try {
    static_fluct_integral(2.0 * std::numbers::pi, 1.0);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.saturation_rate() == doctest::Approx(2.0 * std::numbers::pi));
  }
  CHECK_THROWS_AS(static_fluct_integral(7.0, 1.0), DivergenceError);
  CHECK_THROWS_AS(static_fluct_integral(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(static_fluct_integral(1.0, -1.0), DomainError);
}

TEST_CASE("fluctuation bounds") {
  FluctuationInputs in;
  in.entropy = 6.0;
  in.beta = 1.0;
  in.omega = 0.7;
  in.rate = 1.3;
  in.locality = 1;
  in.logical_qubits = 1;
  // Eliminating lambda through the code-error bound gives back the rate form.
  in.epsilon_code = 8.0 * std::exp(-in.entropy / 4.0 - std::numbers::pi * in.omega / (2.0 * *in.rate));
  in.measured_dynamic = 1e-4;
  in.measured_static = 0.1;
  in.measured_spectral = {{0.5, 1e-3}, {-0.5, 1e-3}};
  const FluctuationReport r = fluctuation_bounds(in);
  REQUIRE(r.dynamic_bound_rate);
  REQUIRE(r.dynamic_bound_code);
  CHECK(*r.dynamic_bound_code == doctest::Approx(*r.dynamic_bound_rate).epsilon(1e-12));
  CHECK(*r.dynamic_bound_rate == doctest::Approx(std::exp(-6.0 - std::numbers::pi * 0.7 / 1.3)));
  CHECK(*r.dynamic_bound_code_as_printed == doctest::Approx(std::exp(-9.0 + 3.0 + std::numbers::pi * 0.7 / 1.3)));
  CHECK(*r.static_bound == doctest::Approx(static_fluct_integral(1.3, 1.0)));
  CHECK(*r.dynamic_slack == doctest::Approx(1e-4 / *r.dynamic_bound_rate));
  CHECK(r.spectral.size() == 2);
  CHECK(*r.spectral[0].rate_bound == doctest::Approx(*r.spectral[1].rate_bound));
  CHECK(*r.spectral[0].code_bound ==
        doctest::Approx(4.0 * std::numbers::pi * std::cosh(0.25) * std::exp(3.0 - 3.0 - std::numbers::pi * 0.7 / 1.3)));
  CHECK(r.within_slack == (*r.dynamic_slack <= 10 && *r.static_slack <= 10));
  CHECK_FALSE(r.vacuous);

  FluctuationInputs hot = in;
  hot.rate = 2.0 * std::numbers::pi;
  const FluctuationReport d = fluctuation_bounds(hot);
  CHECK(d.static_divergent);
  CHECK(d.vacuous);
  CHECK_FALSE(d.static_bound);

  FluctuationInputs loud = in;
  loud.measured_dynamic = 1.0;
  CHECK_FALSE(fluctuation_bounds(loud).within_slack);

  FluctuationInputs none;
  CHECK_THROWS_AS(fluctuation_bounds(none), ValidationError);
  FluctuationInputs big = in;
  big.epsilon_code = 100.0;
  CHECK(fluctuation_bounds(big).vacuous);
}

TEST_CASE("series CSV") {
  CorrelatorSeries s;
  s.times = {0.0, 0.5};
  s.values = {{1.0, 0.0}, {0.25, -0.125}};
  std::ostringstream out;
  s.write_csv(out);
  CHECK(out.str() == "t,re,im\n0,1,0\n0.5,0.25,-0.125\n");
  CHECK(uniform_grid(0.0, 1.0, 3) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 0), ValidationError);
}

}
