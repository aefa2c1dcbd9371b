#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acceval/config.hpp"
#include "acceval/cross_entropy.hpp"
#include "acceval/estimation.hpp"

namespace acceval {

std::string_view library_version() noexcept;

/// How far the pipeline goes. Estimate requires warm-start tilts for IS.
enum class Stage { Search, Estimate, Run };

struct RunOptions {
  Stage stage = Stage::Run;
  unsigned workers = 1;
};

/// Tilts for one (event family, bin), either searched or warm-started.
struct SearchOutcome {
  EventType event = EventType::Conflict;  // conflict or crash
  std::string bin;
  bool warm_started = false;
  ProposalParams params;
  std::optional<CeState> state;  // set when CE ran
};

struct RunRow {
  EventType event = EventType::Conflict;
  SamplingMode mode = SamplingMode::Is;
  std::string bin;
  std::optional<ProposalParams> proposal;
  std::uint32_t stream_tag = 0;
  EstimationResult result;
  Interval ci;
  std::optional<double> rel_half_width;
  /// Naturalistic lane changes needed; nullopt when gamma-hat is 0.
  std::optional<double> n_nature;
  std::string n_nature_source;  // "predictive", "actual" or "unavailable"
  std::optional<AcceleratedRate> rate;
  /// (scenario index, trace) for event scenarios when traces are requested.
  std::vector<std::pair<std::uint64_t, SimTrace>> traces;
};

struct Provenance {
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::string version;
};

struct RunReport {
  Provenance provenance;
  std::string config_json;  // resolved config, pretty-printed
  double r_lc = 0.0;
  ConfidenceSpec confidence;
  bool verbose_traces = false;
  std::vector<SearchOutcome> searches;
  std::vector<RunRow> rows;
  /// Non-fatal per-bin failures (CE without events, missing warm start).
  std::vector<std::string> errors;

  bool all_converged() const noexcept;
};

/// Stream tag layout: purpose (CE, CMC, IS) x event family x bin. Injury
/// shares the crash family, so crash and injury see identical scenarios.
enum class StreamPurpose : std::uint32_t { CeSearch = 1, Cmc = 2, Is = 3 };
std::uint32_t stream_tag_for(StreamPurpose purpose, EventType event, std::size_t bin_index) noexcept;

/// Search and/or estimation for every configured event, bin and mode.
/// Results do not depend on options.workers.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Writes summary.json, config.json, convergence_*.csv, ce_history_*.csv and,
/// when traces were requested, scenarios_*.csv and traces_*.csv. Output is a
/// pure function of the report. Throws std::runtime_error naming the path on
/// I/O failure.
void write_report(const RunReport& report, const std::filesystem::path& dir);

/// Table of a written report, re-rendered from summary.json. Each estimate is
/// cross-checked against the last row of its convergence log.
std::string render_report(const std::filesystem::path& dir);

}  // namespace acceval
