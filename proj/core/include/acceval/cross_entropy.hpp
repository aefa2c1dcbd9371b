#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acceval/av_plant.hpp"
#include "acceval/estimation.hpp"
#include "acceval/scenario_model.hpp"

namespace acceval {

/// One simulated scenario as seen by the CE update.
struct CeSample {
  double r_inv = 0.0;
  double ttc_inv = 0.0;
  double lambda_ttc = 0.0;  // lambda_TTC(v_L) of this sample
  double weight = 0.0;      // likelihood * indicator
};

struct CeTilts {
  double vartheta_r = 0.0;
  double vartheta_ttc = 0.0;
};

/// Closed-form CE step for the exponential tilting family:
///   vartheta = sum w (lambda - x) / sum w
/// with the per-sample lambda_TTC. Results are clamped to
/// vartheta <= (1 - margin) * lambda, using `lambda_ttc_ref` (the smallest
/// lambda_TTC over the bin) for the TTC tilt. Throws NoEventError when every
/// weight is zero.
CeTilts ce_update(std::span<const CeSample> samples, double lambda_r, double lambda_ttc_ref,
                  double margin = 0.01);

struct CeHistoryEntry {
  int iteration = 0;
  double vartheta_r = 0.0;
  double vartheta_ttc = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
};

struct CeState {
  int iteration = 0;
  ProposalParams params;
  std::uint64_t n_per_iter = 0;
  std::uint64_t event_hits = 0;
  std::vector<CeHistoryEntry> history;
};

struct CeOptions {
  std::uint64_t n_per_iter = 100;
  int iterations = 10;
  double margin = 0.01;
  int max_zero_hit = 3;
  /// When > 0 and an iteration sees fewer than elite_fraction * n events, the
  /// update uses the intermediate event {event or score <= q}, where score is
  /// criticality_score() and q its elite_fraction quantile in the iteration.
  /// 0 disables this and runs the plain indicator update.
  double elite_fraction = 0.1;
  std::uint64_t seed = 0;
  std::uint32_t stream_tag = 0;
  unsigned workers = 1;
};

/// Iterative CE search for the (vartheta_R, vartheta_TTC) tilts of one bin,
/// starting from (0, 0). Injury events search with the crash indicator.
CeState ce_search(const ScenarioModel& model, const AvConfig& plant, const std::string& bin,
                  EventType event, const CeOptions& options);

/// CE for a single exponential variable and the tail event {X > threshold},
/// tilting `base` in the same mean-shift family. Returns the tilt after each
/// iteration. Used as an analytic reference problem.
std::vector<double> ce_search_tail(const TruncatedExponential& base, double threshold,
                                   const CeOptions& options);

}  // namespace acceval
