#include "ethlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ethlab/aqec_bounds.hpp"
#include "ethlab/chaos_dynamics.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/eth_extract.hpp"
#include "ethlab/eth_synth.hpp"
#include "ethlab/io.hpp"
#include "ethlab/model_lab.hpp"
#include "ethlab/spectral_core.hpp"

#ifndef ETHLAB_VERSION
#define ETHLAB_VERSION "0.0.0"
#endif

namespace ethlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Writes stage outputs and records their hashes.
class StageWriter {
 public:
  StageWriter(fs::path dir, StageRecord& record) : dir_(std::move(dir)), record_(record) {}

  void bytes(const std::string& name, const std::string& data) {
    io::write_file(dir_ / name, data);
    record_.files.push_back({name, io::sha256_hex(data)});
  }
  void csv(const std::string& name, const io::CsvTable& table) { bytes(name, io::encode_csv(table)); }
  void json_file(const std::string& name, const json& j) { bytes(name, io::encode_json(j)); }
  void matrix(const std::string& name, const ComplexMatrix& m) { bytes(name, io::encode_matrix(m)); }
  template <class T>
  void stream(const std::string& name, const T& object) {
    std::ostringstream out;
    object.write_csv(out);
    bytes(name, out.str());
  }

 private:
  fs::path dir_;
  StageRecord& record_;
};

fs::path require_file(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  if (!fs::exists(p)) throw ValidationError("missing " + p.string() + "; run the earlier stages first");
  return p;
}

EnergySpectrum load_spectrum(const fs::path& dir) {
  const io::CsvTable t = io::read_csv(require_file(dir, "spectrum.csv"));
  const std::size_t col = t.column("energy");
  RealVector e(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) e(static_cast<Index>(i)) = t.rows[i][col];
  return EnergySpectrum(std::move(e));
}

EntropyModel load_entropy(const fs::path& dir) {
  const io::CsvTable t = io::read_csv(require_file(dir, "entropy.csv"));
  const json meta = io::read_json(require_file(dir, "generate.json"));
  std::vector<double> grid, s;
  const std::size_t ce = t.column("energy");
  const std::size_t cs = t.column("entropy");
  for (const auto& row : t.rows) {
    grid.push_back(row[ce]);
    s.push_back(row[cs]);
  }
  return EntropyModel(std::move(grid), std::move(s), meta.at("entropy_width").get<double>());
}

OperatorEigenbasis load_operator(const fs::path& dir) {
  return OperatorEigenbasis(io::read_matrix(require_file(dir, "operator.ethm")));
}

LambdaSource parse_source(const std::string& s) {
  if (s == "fitted") return LambdaSource::fitted;
  if (s == "envelope") return LambdaSource::envelope;
  if (s == "chaos-bound") return LambdaSource::chaos_bound;
  return LambdaSource::automatic;
}

std::string rejection_name(FitRejection r) {
  switch (r) {
    case FitRejection::nonpositive_gap: return "nonpositive_gap";
    case FitRejection::non_growing: return "non_growing";
    case FitRejection::hierarchy: return "hierarchy";
  }
  return "unknown";
}

void stage_generate(const RunConfig& c, const fs::path& dir, StageRecord& rec) {
  StageWriter w(dir, rec);
  json meta;
  meta["model"] = c.model.kind;
  meta["seed"] = c.seed;
  std::optional<EnergySpectrum> spectrum;
  std::optional<EntropyModel> entropy;
  std::optional<OperatorEigenbasis> op;
  double width = 0.0;
  int qubits = 0;

  if (c.model.kind == "ising") {
    const HamiltonianMatrix h = build_mixed_field_ising(c.model.ising);
    spectrum = eigendecompose(h);
    meta["eigensolver"] = to_string(resolve_backend(EigenBackend::automatic));
    width = c.extract.entropy_width.value_or(default_entropy_width(*spectrum));
    entropy = entropy_model(*spectrum, width);
    qubits = c.model.ising.sites;
    if (c.observable.kind == "pauli") {
      const LocalObservableSpec spec = LocalObservableSpec::parse(c.observable.word, c.observable.support);
      std::optional<ThermalContext> ctx;
      if (c.observable.traceless) ctx = ThermalContext{&*spectrum, c.thermal.betas.front()};
      op = to_eigenbasis(build_local_observable(spec, qubits, ctx), *spectrum);
    }
  } else {
    const auto& s = c.model.synth;
    spectrum = synth_spectrum({s.dim, s.shape, s.bandwidth, c.seed});
    const RealVector& e = spectrum->eigenvalues();
    if (s.entropy == "log_dim") {
      entropy = EntropyModel::constant(std::log(static_cast<double>(s.dim)), e(0), e(e.size() - 1));
    } else {
      width = c.extract.entropy_width.value_or(default_entropy_width(*spectrum));
      entropy = entropy_model(*spectrum, width);
    }
    qubits = static_cast<int>(std::ceil(std::log2(static_cast<double>(s.dim))));
    if (c.observable.kind == "synthetic") {
      const EnvelopeSpec env = s.envelope == EnvelopeForm::constant ? EnvelopeSpec::constant(s.amplitude)
                                                                    : EnvelopeSpec::exp_decay(s.decay_rate, s.amplitude);
      const double slope = s.diagonal_slope;
      const double mid = 0.5 * s.bandwidth;
      op = synth_eth_operator(*spectrum, *entropy, env, [slope, mid](double en) { return slope * (en - mid); },
                              c.seed, "linear")
               .matrix;
    }
  }
  if (c.observable.kind == "identity") {
    op = OperatorEigenbasis(ComplexMatrix::Identity(spectrum->dim(), spectrum->dim()));
  }

  io::CsvTable spec_t{{"n", "energy"}, {}};
  for (Index n = 0; n < spectrum->dim(); ++n) spec_t.rows.push_back({static_cast<double>(n), spectrum->energy(n)});
  io::CsvTable ent_t{{"energy", "entropy", "beta"}, {}};
  for (std::size_t i = 0; i < entropy->grid().size(); ++i) {
    ent_t.rows.push_back({entropy->grid()[i], entropy->entropy_grid()[i], entropy->beta_grid()[i]});
  }
  meta["dim"] = spectrum->dim();
  meta["physical_qubits"] = qubits;
  meta["bandwidth"] = spectrum->bandwidth();
  meta["bulk_level_spacing"] = spectrum->bulk_level_spacing();
  meta["level_spacing_ratio"] = level_spacing_ratio(spectrum->eigenvalues());
  meta["entropy_width"] = width;
  meta["observable"] = {{"kind", c.observable.kind},
                        {"word", c.observable.word},
                        {"support", c.observable.support},
                        {"traceless", c.observable.traceless}};
  w.csv("spectrum.csv", spec_t);
  w.csv("entropy.csv", ent_t);
  w.matrix("operator.ethm", op->entries());
  w.json_file("generate.json", meta);
}

void stage_extract(const RunConfig& c, const fs::path& dir, StageRecord& rec) {
  const EnergySpectrum spectrum = load_spectrum(dir);
  const EntropyModel entropy = load_entropy(dir);
  const OperatorEigenbasis a = load_operator(dir);
  StageWriter w(dir, rec);

  const double bw = spectrum.bandwidth();
  const double h = std::max(c.extract.profile_fraction * bw, 3.0 * spectrum.bulk_level_spacing());
  const DiagonalProfile profile = diagonal_profile(a, spectrum, h);
  EnvelopeBinning binning =
      default_binning(spectrum, c.extract.slice_fraction, c.extract.omega_fraction, c.extract.omega_bins);
  binning.min_count = c.extract.min_count;
  binning.fit_omega_min = c.extract.fit_omega_min;
  binning.fit_omega_max = c.extract.fit_omega_max;
  const EnvelopeModel env = envelope_estimate(a, spectrum, entropy, binning);

  json out;
  out["profile_bandwidth"] = h;
  out["decay_rate"] = opt(env.decay_rate());
  json slices = json::array();
  for (const SliceFit& f : env.fits()) {
    slices.push_back({{"energy_center", f.energy_center},
                      {"decay_rate", opt(f.decay_rate)},
                      {"standard_error", num(f.standard_error)},
                      {"residual", num(f.residual)},
                      {"fit_omega_min", num(f.fit_omega_min)},
                      {"fit_omega_max", num(f.fit_omega_max)},
                      {"bins_used", f.bins_used}});
  }
  out["slices"] = slices;

  const RealVector& e = spectrum.eigenvalues();
  const double median = e(e.size() / 2);
  try {
    const MicrocanonicalWindow win = microcanonical_window(spectrum, median, c.extract.slice_fraction * bw);
    const GaussianityStats g = gaussianity_stats(a, spectrum, entropy, env, win);
    out["gaussianity"] = {{"mean", g.mean},
                          {"variance", g.variance},
                          {"skewness", g.skewness},
                          {"excess_kurtosis", g.excess_kurtosis},
                          {"samples", g.samples},
                          {"mean_standard_error", g.mean_standard_error},
                          {"low_power", g.low_power}};
  } catch (const ValidationError& err) {
    out["gaussianity"] = {{"error", err.what()}};
  }

  io::CsvTable diag{{"energy", "value", "scatter"}, {}};
  for (std::size_t i = 0; i < profile.energies.size(); ++i) {
    diag.rows.push_back({profile.energies[i], profile.values[i], profile.scatter[i]});
  }
  w.csv("diagonal.csv", diag);
  w.stream("envelope.csv", env);
  w.json_file("extract.json", out);
}

CodeSpec code_from_json(const json& j) {
  CodeSpec code;
  code.members = j.at("members").get<std::vector<Index>>();
  code.logical_qubits = j.at("logical_qubits").get<int>();
  code.locality = j.at("locality").get<int>();
  code.physical_qubits = j.at("physical_qubits").get<int>();
  const json& win = j.at("window");
  code.window = {win.at("center").get<double>(), win.at("half_width").get<double>(), win.at("first").get<Index>(),
                 win.at("last").get<Index>()};
  code.validate();
  return code;
}

void stage_code_error(const RunConfig& c, const fs::path& dir, StageRecord& rec) {
  const EnergySpectrum spectrum = load_spectrum(dir);
  const EntropyModel entropy = load_entropy(dir);
  const OperatorEigenbasis a = load_operator(dir);
  const json meta = io::read_json(require_file(dir, "generate.json"));
  StageWriter w(dir, rec);

  const double center =
      c.code.window_center.value_or(thermal_state(spectrum, c.thermal.betas.front()).mean_energy(spectrum));
  const MicrocanonicalWindow win = microcanonical_window(spectrum, center, c.code.window_half_width);
  const CodeSelection sel = c.code.selection == "random" ? CodeSelection::random_in_window : CodeSelection::nearest_center;
  const CodeSpec code = select_code(spectrum, win, c.code.logical_qubits, c.code.locality,
                                    meta.at("physical_qubits").get<int>(), sel, c.seed);
  const KlResidualReport rep = kl_residuals(a, spectrum, code);

  json out;
  out["members"] = code.members;
  out["logical_qubits"] = code.logical_qubits;
  out["locality"] = code.locality;
  out["physical_qubits"] = code.physical_qubits;
  // Locality accounting is only claimed for contiguous supports.
  if (c.observable.kind == "pauli") {
    out["support_contiguous"] = LocalObservableSpec::parse(c.observable.word, c.observable.support).contiguous();
  } else {
    out["support_contiguous"] = nullptr;
  }
  out["window"] = {{"center", win.center}, {"half_width", win.half_width}, {"first", win.first}, {"last", win.last}};
  out["c_a"] = rep.c_a;
  out["diagonal_spread"] = rep.diagonal_spread;
  out["epsilon_max"] = rep.epsilon_max;
  out["epsilon_code"] = rep.epsilon_code;
  out["mean_energy"] = rep.mean_energy;
  out["entropy"] = entropy.entropy(rep.mean_energy);
  out["max_omega"] = rep.omega.size() ? rep.omega.cwiseAbs().maxCoeff() : 0.0;
  w.json_file("code_error.json", out);
}

void stage_dynamics(const RunConfig& c, const fs::path& dir, StageRecord& rec) {
  const EnergySpectrum spectrum = load_spectrum(dir);
  const OperatorEigenbasis a = load_operator(dir);
  const json code_j = io::read_json(require_file(dir, "code_error.json"));
  StageWriter w(dir, rec);
  const std::vector<double> times = c.dynamics.time.points();
  const std::vector<double> omegas = c.dynamics.omega.points();

  const PureStateCoefficients state = PureStateCoefficients::gaussian_packet(
      spectrum, code_j.at("mean_energy").get<double>(), c.dynamics.state_width, c.seed);
  const double dyn = dynamical_fluctuation(a, state);
  const auto members = code_j.at("members").get<std::vector<Index>>();
  json stat_values = json::array();
  double stat_mean = 0.0;
  for (const Index n : members) {
    const double v = static_fluctuation(a, n);
    stat_values.push_back(v);
    stat_mean += v / static_cast<double>(members.size());
  }

  json betas = json::array();
  for (std::size_t bi = 0; bi < c.thermal.betas.size(); ++bi) {
    const double beta = c.thermal.betas[bi];
    const std::string sub = "beta_" + std::to_string(bi) + "/";
    json entry;
    entry["beta"] = beta;

    const CorrelatorSeries f2 = two_point(a, spectrum, beta, times);
    const auto [fsym, resp] = symmetric_and_response(a, spectrum, beta, times);
    w.stream(sub + "f2.csv", f2);
    w.stream(sub + "fsym.csv", fsym);
    w.stream(sub + "resp.csv", resp);
    const double plateau = two_point_plateau(a, spectrum, beta);
    const std::optional<double> td = dissipation_time(f2, plateau);
    entry["f2_zero"] = f2.values.front().real();
    entry["f2_plateau"] = plateau;
    entry["dissipation_time"] = opt(td);

    try {
      const SpectralDensity sd = spectral_densities(a, spectrum, beta, c.dynamics.sigma_omega, omegas);
      w.stream(sub + "spectral.csv", sd);
      const FdtResult kubo = fdt_check(sd, c.dynamics.fdt_threshold, FdtRelation::kubo);
      const FdtResult stated = fdt_check(sd, c.dynamics.fdt_threshold, FdtRelation::as_stated);
      entry["fdt"] = {{"max_deviation", num(kubo.max_deviation)},
                      {"max_deviation_as_stated", num(stated.max_deviation)},
                      {"admissible_points", kubo.admissible_points},
                      {"beta_zero", kubo.beta_zero},
                      {"empty", kubo.empty}};
    } catch (const ValidationError& err) {
      entry["fdt"] = {{"error", err.what()}};
    }

    json lyap;
    if (!c.dynamics.otoc) {
      lyap = {{"status", "disabled"}};
    } else {
      try {
        const CorrelatorSeries o = otoc(a, spectrum, beta, times);
        w.stream(sub + "otoc.csv", o);
        try {
          const LyapunovFit fit = fit_lyapunov(o, f2.values.front().real(), c.dynamics.epsilon_reg, c.dynamics.fit_lo,
                                               c.dynamics.fit_hi, td);
          lyap = {{"status", "accepted"},
                  {"rate", fit.rate},
                  {"scrambling_time", fit.scrambling_time},
                  {"dissipation_time", fit.dissipation_time},
                  {"window", {fit.window_lo, fit.window_hi}},
                  {"residual_norm", fit.residual_norm},
                  {"epsilon_reg", fit.epsilon_reg},
                  {"points", fit.points},
                  {"reliability", to_string(fit.reliability)}};
        } catch (const FitRejectedError& err) {
          lyap = {{"status", "rejected"}, {"reason", rejection_name(err.reason())}, {"rate", num(err.rate())},
                  {"message", err.what()}};
        } catch (const ValidationError& err) {
          lyap = {{"status", "error"}, {"message", err.what()}};
        }
      } catch (const CostGuardError& err) {
        lyap = {{"status", "skipped"}, {"estimated_flops", err.estimated_flops()}, {"message", err.what()}};
      }
    }
    entry["lyapunov"] = lyap;
    betas.push_back(entry);
  }

  json out;
  out["betas"] = betas;
  out["dynamical_fluctuation"] = dyn;
  out["static_fluctuation"] = {{"members", members}, {"values", stat_values}, {"mean", stat_mean}};
  out["state"] = {{"center", code_j.at("mean_energy")}, {"width", c.dynamics.state_width}};
  w.json_file("dynamics.json", out);
}

json bound_json(const BoundReport& br, const FluctuationReport& fr) {
  json pairs = json::array();
  for (const PairBound& p : br.pairs) {
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"omega", p.omega},
                     {"theorem1_rhs", p.theorem1_rhs},
                     {"theorem2_lambda_lower", opt(p.theorem2_lambda_lower)},
                     {"theorem1_slack", num(p.theorem1_slack)},
                     {"theorem1_within_slack", p.theorem1_within_slack},
                     {"theorem2_within_slack", p.theorem2_within_slack}});
  }
  json fl = {{"measured_dynamic", opt(fr.measured_dynamic)},
             {"measured_static", opt(fr.measured_static)},
             {"dynamic_bound_rate", opt(fr.dynamic_bound_rate)},
             {"dynamic_bound_code", opt(fr.dynamic_bound_code)},
             {"dynamic_bound_code_as_printed", opt(fr.dynamic_bound_code_as_printed)},
             {"static_bound", opt(fr.static_bound)},
             {"static_divergent", fr.static_divergent},
             {"dynamic_slack", opt(fr.dynamic_slack)},
             {"static_slack", opt(fr.static_slack)},
             {"within_slack", fr.within_slack},
             {"vacuous", fr.vacuous}};
  return {{"beta", br.beta},
          {"entropy", br.entropy},
          {"lambda_used", br.lambda_used},
          {"lambda_source", to_string(br.lambda_source)},
          {"chaos_bound", num(br.chaos_bound_value)},
          {"epsilon_code", br.epsilon_code},
          {"max_omega", br.max_omega},
          {"theorem1_rhs", br.theorem1_rhs},
          {"theorem2_lambda_lower", opt(br.theorem2_lambda_lower)},
          {"theorem2_vacuous", br.theorem2_vacuous},
          {"slack", br.slack},
          {"slack_ratios",
           {{"theorem1", num(br.theorem1_slack)}, {"theorem2", num(br.theorem2_slack)}, {"chaos_bound", num(br.chaos_slack)}}},
          {"within_slack",
           {{"theorem1", br.theorem1_within_slack},
            {"theorem2", br.theorem2_within_slack},
            {"chaos_bound", br.chaos_bound_within_slack}}},
          {"dissipation_time", opt(br.dissipation_time)},
          {"scrambling_time", opt(br.scrambling_time)},
          {"pairs", pairs},
          {"fluctuation", fl}};
}

void stage_bounds(const RunConfig& c, const fs::path& dir, StageRecord& rec) {
  const EnergySpectrum spectrum = load_spectrum(dir);
  const EntropyModel entropy = load_entropy(dir);
  const OperatorEigenbasis a = load_operator(dir);
  const json code_j = io::read_json(require_file(dir, "code_error.json"));
  const json extract_j = io::read_json(require_file(dir, "extract.json"));
  const json dyn_j = io::read_json(require_file(dir, "dynamics.json"));
  StageWriter w(dir, rec);

  const KlResidualReport rep = kl_residuals(a, spectrum, code_from_json(code_j));
  std::optional<double> gamma;
  if (extract_j.at("decay_rate").is_number()) gamma = extract_j.at("decay_rate").get<double>();

  json betas = json::array();
  bool violation = false;
  for (std::size_t bi = 0; bi < c.thermal.betas.size(); ++bi) {
    const double beta = c.thermal.betas[bi];
    const json* dyn = nullptr;
    for (const auto& e : dyn_j.at("betas")) {
      if (e.at("beta").get<double>() == beta) dyn = &e;
    }
    if (!dyn) throw ValidationError("dynamics.json has no entry for beta = " + io::format_double(beta));
    BoundInputs in;
    in.beta = beta;
    in.source = parse_source(c.bounds.lambda_source);
    in.slack = c.slack;
    in.envelope_decay_rate = gamma;
    const json& lyap = dyn->at("lyapunov");
    if (lyap.at("status") == "accepted") {
      in.fitted_rate = lyap.at("rate").get<double>();
      in.scrambling_time = lyap.at("scrambling_time").get<double>();
    }
    if (dyn->at("dissipation_time").is_number()) in.dissipation_time = dyn->at("dissipation_time").get<double>();
    const BoundReport br = check_bounds(rep, nullptr, entropy, in);

    FluctuationInputs fi;
    fi.rate = br.lambda_used;
    fi.epsilon_code = rep.epsilon_code;
    fi.locality = rep.code.locality;
    fi.logical_qubits = rep.code.logical_qubits;
    fi.entropy = br.entropy;
    fi.beta = beta;
    fi.omega = br.max_omega;
    fi.measured_dynamic = dyn_j.at("dynamical_fluctuation").get<double>();
    fi.measured_static = dyn_j.at("static_fluctuation").at("mean").get<double>();
    fi.slack = c.slack;
    const FluctuationReport fr = fluctuation_bounds(fi);

    violation = violation || !br.all_within_slack() || !fr.within_slack;
    if (!rec.lambda_source) rec.lambda_source = to_string(br.lambda_source);
    betas.push_back(bound_json(br, fr));
  }
  rec.violation = violation;
  w.json_file("bounds.json", {{"betas", betas}, {"violation", violation}});
}

json record_json(const StageRecord& r) {
  json files = json::array();
  for (const auto& f : r.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return {{"stage", to_string(r.stage)}, {"files", files}, {"wall_seconds", r.wall_seconds}};
}

std::string point_dir(std::size_t index) {
  std::string s = std::to_string(index);
  if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
  return "point_" + s;
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::generate: return "generate";
    case Stage::extract: return "extract";
    case Stage::code_error: return "code-error";
    case Stage::dynamics: return "dynamics";
    case Stage::bounds: return "bounds";
  }
  return "unknown";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::generate, Stage::extract, Stage::code_error, Stage::dynamics,
                                            Stage::bounds};
  return stages;
}

std::string artifact_version() { return ETHLAB_VERSION; }

json RunManifest::to_json() const {
  json stages_j = json::array();
  for (const auto& s : stages) stages_j.push_back(record_json(s));
  return {{"config_hash", config_hash},
          {"artifact_version", artifact_version},
          {"stages", stages_j},
          {"lambda_source", lambda_source ? json(*lambda_source) : json(nullptr)},
          {"status", static_cast<int>(status)},
          {"error", error}};
}

StageRecord run_stage(Stage stage, const RunConfig& config, const fs::path& dir) {
  config.validate();
  fs::create_directories(dir);
  StageRecord rec;
  rec.stage = stage;
  const auto start = std::chrono::steady_clock::now();
  switch (stage) {
    case Stage::generate: stage_generate(config, dir, rec); break;
    case Stage::extract: stage_extract(config, dir, rec); break;
    case Stage::code_error: stage_code_error(config, dir, rec); break;
    case Stage::dynamics: stage_dynamics(config, dir, rec); break;
    case Stage::bounds: stage_bounds(config, dir, rec); break;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunManifest run(const RunConfig& config, const fs::path& dir) {
  RunManifest m;
  m.config_hash = config_hash(config);
  m.artifact_version = artifact_version();
  Stage current = Stage::generate;
  try {
    fs::create_directories(dir);
    io::write_file(dir / "config.json", io::encode_json(to_json(config)));
    for (const Stage s : all_stages()) {
      current = s;
      m.stages.push_back(run_stage(s, config, dir));
      if (m.stages.back().lambda_source) m.lambda_source = m.stages.back().lambda_source;
      if (m.stages.back().violation) m.status = RunStatus::violation;
    }
  } catch (const std::exception& e) {
    m.status = RunStatus::error;
    m.error = to_string(current) + ": " + e.what();
  }
  try {
    io::write_json(dir / "manifest.json", m.to_json());
  } catch (const std::exception& e) {
    m.status = RunStatus::error;
    if (m.error.empty()) m.error = std::string("manifest: ") + e.what();
  }
  return m;
}

SweepResult sweep(const RunConfig& config, const fs::path& dir, std::size_t workers) {
  SweepResult result;
  result.points = expand_sweep(config);
  const std::size_t n = result.points.size();
  result.manifests.resize(n);
  workers = std::clamp<std::size_t>(workers, 1, n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const SweepPoint& p = result.points[i];
      const fs::path pdir = dir / point_dir(p.index);
      if (!p.config) {
        RunManifest m;
        m.artifact_version = artifact_version();
        m.status = RunStatus::error;
        m.error = "config: " + p.error;
        result.manifests[i] = m;
        continue;
      }
      result.manifests[i] = run(*p.config, pdir);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Aggregation in sweep-key (point index) order.
  std::vector<std::string> axes;
  for (const auto& [path, value] : result.points.front().assignment) axes.push_back(path);
  io::CsvTable agg;
  agg.header = {"point"};
  for (const auto& a : axes) agg.header.push_back(a);
  for (const char* col : {"status", "epsilon_max", "log_epsilon_max", "epsilon_code", "gamma_hat", "lambda",
                          "theorem1_slack", "theorem2_slack", "chaos_slack", "fdt_deviation",
                          "fdt_deviation_as_stated"}) {
    agg.header.push_back(col);
  }
  json points_j = json::array();
  const double nan = std::nan("");
  for (std::size_t i = 0; i < n; ++i) {
    const SweepPoint& p = result.points[i];
    const RunManifest& m = result.manifests[i];
    std::vector<double> row = {static_cast<double>(p.index)};
    for (const auto& [path, value] : p.assignment) {
      if (value.is_number()) {
        row.push_back(value.get<double>());
      } else if (value.is_array() && value.size() == 1 && value[0].is_number()) {
        row.push_back(value[0].get<double>());
      } else {
        row.push_back(nan);
      }
    }
    row.push_back(static_cast<double>(static_cast<int>(m.status)));
    double eps = nan, eps_code = nan, gamma = nan, lambda = nan, s1 = nan, s2 = nan, sc = nan, fdt = nan, fdt2 = nan;
    const fs::path pdir = dir / point_dir(p.index);
    auto read_num = [](const json& j, const char* key) {
      return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : std::nan("");
    };
    try {
      if (fs::exists(pdir / "code_error.json")) {
        const json cj = io::read_json(pdir / "code_error.json");
        eps = read_num(cj, "epsilon_max");
        eps_code = read_num(cj, "epsilon_code");
      }
      if (fs::exists(pdir / "extract.json")) gamma = read_num(io::read_json(pdir / "extract.json"), "decay_rate");
      if (fs::exists(pdir / "bounds.json")) {
        const json& b = io::read_json(pdir / "bounds.json").at("betas").at(0);
        lambda = read_num(b, "lambda_used");
        s1 = read_num(b.at("slack_ratios"), "theorem1");
        s2 = read_num(b.at("slack_ratios"), "theorem2");
        sc = read_num(b.at("slack_ratios"), "chaos_bound");
      }
      if (fs::exists(pdir / "dynamics.json")) {
        const json& d = io::read_json(pdir / "dynamics.json").at("betas").at(0).at("fdt");
        fdt = read_num(d, "max_deviation");
        fdt2 = read_num(d, "max_deviation_as_stated");
      }
    } catch (const std::exception&) {
      // A half-written point keeps NaN columns; its status already says error.
    }
    if (m.status == RunStatus::error) eps = eps_code = gamma = lambda = s1 = s2 = sc = fdt = fdt2 = nan;
    for (const double v : {eps, eps > 0.0 ? std::log(eps) : nan, eps_code, gamma, lambda, s1, s2, sc, fdt, fdt2}) {
      row.push_back(v);
    }
    agg.rows.push_back(std::move(row));
    points_j.push_back({{"point", p.index},
                        {"key", p.key()},
                        {"directory", point_dir(p.index)},
                        {"status", static_cast<int>(m.status)},
                        {"error", m.error}});
    if (m.status == RunStatus::error) {
      result.status = RunStatus::error;
    } else if (m.status == RunStatus::violation && result.status == RunStatus::ok) {
      result.status = RunStatus::violation;
    }
  }
  io::write_csv(dir / "aggregate.csv", agg);
  io::write_json(dir / "sweep.json", {{"config_hash", config_hash(config)}, {"points", points_j}});
  return result;
}

RunConfig demo_config() {
  RunConfig c;
  c.seed = 20240601;
  c.output_dir = "demo_out";
  c.model.kind = "ising";
  c.model.ising.sites = 10;
  c.observable = {"pauli", "Z", {0}, false};
  c.thermal.betas = {1.0};
  c.code.logical_qubits = 1;
  c.code.locality = 1;
  c.code.window_half_width = 0.25;
  c.dynamics.time = {0.0, 6.0, 25};
  c.dynamics.omega = {-4.0, 4.0, 161};
  c.dynamics.sigma_omega = 0.1;
  c.dynamics.fit_lo = 0.5;
  c.dynamics.fit_hi = 1.5;
  return c;
}

}  // namespace ethlab
