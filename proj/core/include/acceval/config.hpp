#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acceval/av_plant.hpp"
#include "acceval/estimation.hpp"
#include "acceval/scenario_model.hpp"

namespace acceval {

/// Serializable form of ScenarioModel. Defaults are placeholders of plausible
/// magnitude, not fitted values.
struct ModelConfig {
  std::vector<double> v_edges;
  std::vector<double> v_mass;
  double r_k = 0.3;
  double r_sigma = 0.0097;
  double r_theta = 1.0 / 75.0;
  double r_lo = 1.0 / 75.0;
  double r_hi = 10.0;
  std::optional<double> lambda_r;  // computed when absent
  std::vector<LambdaNode> ttc_table;
  double lambda_floor = 0.01;
  double ttc_inv_lo = 0.0;
  double ttc_inv_hi = kInfinity;
  std::vector<VelocityBin> bins;

  static ModelConfig defaults();
  ScenarioModel build() const;
};

struct CeConfig {
  int iterations = 10;
  std::uint64_t n_per_iter_conflict = 100;
  std::uint64_t n_per_iter_crash = 500;
  double elite_fraction = 0.1;
  double margin = 0.01;
  int max_zero_hit = 3;
};

enum class NatureMode { Predictive, Actual };

struct EstimationConfig {
  std::uint64_t n_cap = 100'000;
  std::uint64_t batch = 50;
  std::uint64_t min_samples = 100;
  NatureMode n_nature = NatureMode::Predictive;
};

struct TiltPair {
  double vartheta_r = 0.0;
  double vartheta_ttc = 0.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ModelConfig model = ModelConfig::defaults();
  AvConfig plant;
  ConfidenceSpec confidence;
  InjuryModel injury;
  double r_lc = default_r_lc();
  std::vector<EventType> events{EventType::Conflict};
  std::vector<SamplingMode> modes{SamplingMode::Is};
  std::vector<std::string> bins;  // empty = every model bin
  CeConfig ce;
  EstimationConfig estimation;
  /// event ("conflict" or "crash") -> bin -> tilts. Injury uses the crash entry.
  std::map<std::string, std::map<std::string, TiltPair>> warm_start;
  std::string output_dir = "out";
  bool verbose_traces = false;

  /// Bins to run, in model order when none were selected.
  std::vector<std::string> selected_bins() const;
};

/// Parses and validates a JSON config. `seed` is required; unknown keys and
/// invalid values raise ConfigError carrying the key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Full config (defaults applied) as compact JSON with sorted keys.
std::string canonical_json(const ExperimentConfig& cfg);
/// Pretty-printed without output_dir, which never affects results;
/// round-trips through parse_config.
std::string pretty_json(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_json with output_dir removed.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Serialized "model" section, used by the fit subcommand.
std::string model_json(const ModelConfig& model);

}  // namespace acceval
