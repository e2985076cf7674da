#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethlab/eth_synth.hpp"
#include "ethlab/model_lab.hpp"

namespace ethlab {

struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 2;

  std::vector<double> points() const;
};

struct SynthModelConfig {
  Index dim = 1024;
  DosShape shape = DosShape::flat;
  double bandwidth = 20.0;
  /// "log_dim" (S = log D everywhere) or "kernel" (smoothed density of states).
  std::string entropy = "log_dim";
  EnvelopeForm envelope = EnvelopeForm::exp_decay;
  double decay_rate = 0.25;
  double amplitude = 1.0;
  /// O(E) = diagonal_slope * (E - bandwidth / 2).
  double diagonal_slope = 0.0;
};

struct ModelConfig {
  std::string kind = "ising";  ///< ising | synth
  SpinChainParams ising;
  SynthModelConfig synth;
};

struct ObservableConfig {
  std::string kind = "pauli";  ///< pauli | identity | synthetic
  std::string word = "Z";
  std::vector<int> support = {0};
  bool traceless = false;
};

struct ThermalConfig {
  std::vector<double> betas = {1.0};
};

struct ExtractConfig {
  std::optional<double> entropy_width;
  double slice_fraction = 0.05;
  double omega_fraction = 0.5;
  std::size_t omega_bins = 40;
  std::size_t min_count = 50;
  std::optional<double> fit_omega_min;
  std::optional<double> fit_omega_max;
  /// Diagonal-profile kernel width as a fraction of the bandwidth.
  double profile_fraction = 0.02;
};

struct CodeConfig {
  int logical_qubits = 1;
  int locality = 1;
  /// Window center; defaults to the thermal energy at the first beta.
  std::optional<double> window_center;
  double window_half_width = 0.25;
  std::string selection = "nearest";  ///< nearest | random
};

struct DynamicsConfig {
  GridSpec time{0.0, 10.0, 41};
  GridSpec omega{-4.0, 4.0, 161};
  double sigma_omega = 0.1;
  double fit_lo = 0.5;
  double fit_hi = 2.0;
  double epsilon_reg = 0.0;
  double fdt_threshold = 0.05;
  bool otoc = true;
  /// Energy width of the pure state used for the dynamical fluctuation.
  double state_width = 0.5;
};

struct BoundsConfig {
  std::string lambda_source = "automatic";
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  double slack = 10.0;
  ModelConfig model;
  ObservableConfig observable;
  ThermalConfig thermal;
  ExtractConfig extract;
  CodeConfig code;
  DynamicsConfig dynamics;
  BoundsConfig bounds;
  /// Dotted config path -> list of values; empty for a single run.
  nlohmann::json sweep = nlohmann::json::object();

  /// Throws ValidationError for out-of-range or inconsistent fields.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types raise ValidationError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Every field, sorted keys; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);
std::string canonical_dump(const RunConfig& config);
std::string config_hash(const RunConfig& config);

struct SweepPoint {
  std::size_t index = 0;
  /// (path, value) pairs in sorted path order.
  std::vector<std::pair<std::string, nlohmann::json>> assignment;
  /// Empty when the point's config failed validation (see error).
  std::optional<RunConfig> config;
  std::string error;

  std::string key() const;
};

/// Cartesian product of config.sweep, each point with the sweep block cleared.
/// Invalid points carry their validation message instead of a config.
std::vector<SweepPoint> expand_sweep(const RunConfig& config);

/// Replaces the value at a dotted path ("model.synth.dim").
void set_path(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value);

}  // namespace ethlab
