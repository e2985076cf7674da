#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "ethlab/aqec_bounds.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/model_lab.hpp"
#include "oracles.hpp"

using namespace ethlab;

namespace {

struct Instance {
  ComplexMatrix h;
  ComplexMatrix op;
  EnergySpectrum spectrum;
  OperatorEigenbasis a;
};

Instance instance(Index d, std::uint64_t seed) {
  ComplexMatrix h = oracle::random_hermitian(d, seed);
  ComplexMatrix op = oracle::random_hermitian(d, seed + 1000);
  EnergySpectrum s = eigendecompose(HermitianMatrix(h), EigenBackend::eigen);
  OperatorEigenbasis a = to_eigenbasis(HermitianMatrix(op), s);
  return {std::move(h), std::move(op), std::move(s), std::move(a)};
}

EnergySpectrum ladder(Index d) {
  RealVector e(d);
  for (Index n = 0; n < d; ++n) e(n) = static_cast<double>(n);
  return EnergySpectrum(e);
}

}  // namespace

TEST_SUITE("aqec_bounds") {

TEST_CASE("code selection") {
  const EnergySpectrum s = ladder(32);
  const MicrocanonicalWindow w = microcanonical_window(s, 10.2, 3.0);
  const CodeSpec near = select_code(s, w, 2, 1, 5);
  CHECK(near.members == std::vector<Index>{9, 10, 11, 12});
  const CodeSpec r1 = select_code(s, w, 2, 1, 5, CodeSelection::random_in_window, 3);
  const CodeSpec r2 = select_code(s, w, 2, 1, 5, CodeSelection::random_in_window, 3);
  CHECK(r1.members == r2.members);
  for (const Index m : r1.members) CHECK(w.contains(m));
  CHECK_THROWS_AS(select_code(s, w, 3, 1, 5), ValidationError);
  CHECK_THROWS_AS(select_code(s, w, 1, 6, 5), ValidationError);

  CodeSpec bad = near;
  bad.members = {9, 9, 10, 11};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.members = {9, 10, 11, 30};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("Knill-Laflamme residuals match the projector computation") {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const Instance x = instance(96, seed);
    const MicrocanonicalWindow w = microcanonical_window(x.spectrum, 0.0, 4.0);
    const CodeSpec code = select_code(x.spectrum, w, 2, 1, 7, CodeSelection::random_in_window, seed);
    const KlResidualReport r = kl_residuals(x.a, x.spectrum, code);
    const ComplexMatrix ref = oracle::kl_bruteforce(x.op, x.spectrum.basis(), code.members);
    const double scale = (x.op.adjoint() * x.op).cwiseAbs().maxCoeff();
    CHECK((r.epsilon - ref).cwiseAbs().maxCoeff() / scale < 1e-12);
    CHECK(r.epsilon_max == doctest::Approx(ref.cwiseAbs().maxCoeff()).epsilon(1e-10));
    CHECK(r.epsilon_code == doctest::Approx(std::pow(2.0, 1 + 4) * std::sqrt(r.epsilon_max)));
    CHECK(std::abs(r.epsilon.diagonal().real().sum()) < 1e-10 * scale);
    CHECK((r.epsilon - r.epsilon.adjoint()).norm() == 0.0);
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 4; ++j) {
        CHECK(r.omega(i, j) == x.spectrum.energy(code.members[i]) - x.spectrum.energy(code.members[j]));
      }
    }
  }
}

TEST_CASE("unitary Pauli words and the identity are exactly correctable") {
  const int n = 6;
  const EnergySpectrum s = ladder(64);
  const MicrocanonicalWindow w = microcanonical_window(s, 30.0, 10.0);
  const CodeSpec code = select_code(s, w, 2, 2, n, CodeSelection::random_in_window, 9);
  for (const char* word : {"X", "Y", "Z", "XY", "ZZ"}) {
    const auto spec = LocalObservableSpec::parse(word, word[1] ? std::vector<int>{2, 3} : std::vector<int>{4});
    const OperatorEigenbasis a = to_eigenbasis(build_local_observable(spec, n), s);
    const KlResidualReport r = kl_residuals(a, s, code);
    CAPTURE(word);
    CHECK(r.epsilon_max == 0.0);
    CHECK(r.c_a == 1.0);
    CHECK(r.epsilon_code == 0.0);
  }
  const KlResidualReport id = kl_residuals(OperatorEigenbasis(ComplexMatrix::Identity(64, 64)), s, code);
  CHECK(id.epsilon_max == 0.0);
}

TEST_CASE("theorem 1 and its inverse") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const double entropy = 1.0 + 19.0 * u(gen);
    const double rate = 0.1 + 9.9 * u(gen);
    const double omega = 0.5 + 4.5 * u(gen);
    const int d = 1 + static_cast<int>(3 * u(gen));
    const int k = static_cast<int>(3 * u(gen));
    const double eps = theorem1_rhs(entropy, rate, omega, d, k);
    CHECK(eps == doctest::Approx(std::pow(2.0, d + 2 * k) *
                                 std::exp(-entropy / 4.0 - std::numbers::pi * omega / (2.0 * rate))));
    const auto back = theorem2_lambda_lower(eps, d, k, entropy, omega);
    REQUIRE(back);
    CHECK(std::abs(*back - rate) / rate < 1e-12);
  }
  CHECK(theorem1_rhs(4.0, 1.0, 1.0, 1, 1, Theorem1Form::intermediate) ==
        doctest::Approx(8.0 * std::exp(-1.0 - std::numbers::pi / 4.0)));
  CHECK(theorem1_rhs(4.0, 1.0, -1.0, 1, 1) == theorem1_rhs(4.0, 1.0, 1.0, 1, 1));
  CHECK_THROWS_AS(theorem1_rhs(4.0, 0.0, 1.0, 1, 1), DomainError);
  // epsilon_code at the prefactor makes the bound vacuous.
  CHECK_FALSE(theorem2_lambda_lower(8.0, 1, 1, 1.0, 1.0));
  CHECK_THROWS_AS(theorem2_lambda_lower(-1.0, 1, 1, 1.0, 1.0), DomainError);
  // An exact code pins lambda_lower to zero.
  CHECK(*theorem2_lambda_lower(0.0, 1, 1, 1.0, 1.0) == 0.0);
}

TEST_CASE("lambda source resolution and slack flags") {
  const Instance x = instance(64, 7);
  const MicrocanonicalWindow w = microcanonical_window(x.spectrum, 0.0, 3.0);
  const CodeSpec code = select_code(x.spectrum, w, 1, 1, 6);
  const KlResidualReport r = kl_residuals(x.a, x.spectrum, code);
  const EntropyModel ent = EntropyModel::constant(std::log(64.0), -100.0, 100.0);

  BoundInputs in;
  in.beta = 2.0;
  BoundReport b = check_bounds(r, nullptr, ent, in);
  CHECK(b.lambda_source == LambdaSource::chaos_bound);
  CHECK(b.lambda_used == doctest::Approx(std::numbers::pi));
  CHECK(b.chaos_slack == doctest::Approx(1.0));

  in.envelope_decay_rate = 0.5;
  b = check_bounds(r, nullptr, ent, in);
  CHECK(b.lambda_source == LambdaSource::envelope);
  CHECK(b.lambda_used == doctest::Approx(std::numbers::pi));

  in.fitted_rate = 0.8;
  b = check_bounds(r, nullptr, ent, in);
  CHECK(b.lambda_source == LambdaSource::fitted);
  CHECK(b.lambda_used == 0.8);
  REQUIRE(b.pairs.size() == 1);
  const PairBound& p = b.pairs.front();
  CHECK(p.theorem1_rhs == doctest::Approx(theorem1_rhs(std::log(64.0), 0.8, p.omega, 1, 1)));
  CHECK(b.theorem1_slack == doctest::Approx(r.epsilon_code / p.theorem1_rhs));
  CHECK(b.theorem1_within_slack == (b.theorem1_slack <= 10.0));

  in.source = LambdaSource::chaos_bound;
  CHECK(check_bounds(r, nullptr, ent, in).lambda_used == doctest::Approx(std::numbers::pi));

  // A very slow envelope decay implies a lambda far above the chaos bound.
  in = {};
  in.beta = 2.0;
  in.envelope_decay_rate = 0.01;
  b = check_bounds(r, nullptr, ent, in);
  CHECK(b.chaos_slack == doctest::Approx(50.0));
  CHECK_FALSE(b.chaos_bound_within_slack);
  CHECK_FALSE(b.all_within_slack());

  in = {};
  in.beta = 0.0;
  CHECK_THROWS_AS(check_bounds(r, nullptr, ent, in), ValidationError);
  in.source = LambdaSource::fitted;
  CHECK_THROWS_AS(check_bounds(r, nullptr, ent, in), ValidationError);
  in = {};
  in.slack = 0.5;
  CHECK_THROWS_AS(check_bounds(r, nullptr, ent, in), ValidationError);
  CHECK(to_string(LambdaSource::chaos_bound) == "chaos-bound");
}

}
