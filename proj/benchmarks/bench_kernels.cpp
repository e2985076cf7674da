#include <cmath>

#include <benchmark/benchmark.h>

#include "ethlab/aqec_bounds.hpp"
#include "ethlab/chaos_dynamics.hpp"
#include "ethlab/eth_extract.hpp"
#include "ethlab/eth_synth.hpp"
#include "ethlab/model_lab.hpp"

using namespace ethlab;

namespace {

struct Chain {
  EnergySpectrum spectrum;
  OperatorEigenbasis a;
};

Chain chain(int sites) {
  SpinChainParams p;
  p.sites = sites;
  const HamiltonianMatrix h = build_mixed_field_ising(p);
  EnergySpectrum s = eigendecompose(h);
  OperatorEigenbasis a = to_eigenbasis(build_local_observable(LocalObservableSpec::parse("Z", {0}), sites), s);
  return {std::move(s), std::move(a)};
}

void BM_Eigendecompose(benchmark::State& state) {
  SpinChainParams p;
  p.sites = static_cast<int>(state.range(0));
  const HamiltonianMatrix h = build_mixed_field_ising(p);
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(h));
}
BENCHMARK(BM_Eigendecompose)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

void BM_SynthOperator(benchmark::State& state) {
  const Index d = state.range(0);
  const EnergySpectrum s = synth_spectrum({d, DosShape::flat, 20.0, 1});
  const EntropyModel ent = EntropyModel::constant(std::log(static_cast<double>(d)), 0.0, 20.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        synth_eth_operator(s, ent, EnvelopeSpec::exp_decay(0.25), [](double) { return 0.0; }, 7));
  }
}
BENCHMARK(BM_SynthOperator)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);

void BM_EnvelopeEstimate(benchmark::State& state) {
  const Index d = state.range(0);
  const EnergySpectrum s = synth_spectrum({d, DosShape::flat, 20.0, 1});
  const EntropyModel ent = EntropyModel::constant(std::log(static_cast<double>(d)), 0.0, 20.0);
  const SynthEthOperator op =
      synth_eth_operator(s, ent, EnvelopeSpec::exp_decay(0.25), [](double) { return 0.0; }, 7);
  const EnvelopeBinning b = default_binning(s);
  for (auto _ : state) benchmark::DoNotOptimize(envelope_estimate(op.matrix, s, ent, b));
}
BENCHMARK(BM_EnvelopeEstimate)->RangeMultiplier(2)->Range(512, 2048)->Unit(benchmark::kMillisecond);

void BM_KlResiduals(benchmark::State& state) {
  const Index d = state.range(0);
  const EnergySpectrum s = synth_spectrum({d, DosShape::flat, 20.0, 1});
  const EntropyModel ent = EntropyModel::constant(std::log(static_cast<double>(d)), 0.0, 20.0);
  const SynthEthOperator op =
      synth_eth_operator(s, ent, EnvelopeSpec::exp_decay(0.25), [](double) { return 0.0; }, 7);
  const MicrocanonicalWindow w = microcanonical_window(s, 10.0, 1.0);
  const CodeSpec code = select_code(s, w, 2, 1, 12);
  for (auto _ : state) benchmark::DoNotOptimize(kl_residuals(op.matrix, s, code));
}
BENCHMARK(BM_KlResiduals)->RangeMultiplier(2)->Range(512, 4096);

void BM_TwoPoint(benchmark::State& state) {
  const Chain c = chain(static_cast<int>(state.range(0)));
  const std::vector<double> times = uniform_grid(0.0, 10.0, 41);
  for (auto _ : state) benchmark::DoNotOptimize(two_point(c.a, c.spectrum, 1.0, times));
}
BENCHMARK(BM_TwoPoint)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

void BM_Otoc(benchmark::State& state) {
  const Chain c = chain(static_cast<int>(state.range(0)));
  const std::vector<double> times = uniform_grid(0.0, 5.0, 5);
  for (auto _ : state) benchmark::DoNotOptimize(otoc(c.a, c.spectrum, 1.0, times));
}
BENCHMARK(BM_Otoc)->DenseRange(6, 9, 1)->Unit(benchmark::kMillisecond);

void BM_SpectralDensities(benchmark::State& state) {
  const Chain c = chain(static_cast<int>(state.range(0)));
  const std::vector<double> grid = uniform_grid(-4.0, 4.0, 161);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_densities(c.a, c.spectrum, 1.0, 0.1, grid));
}
BENCHMARK(BM_SpectralDensities)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
