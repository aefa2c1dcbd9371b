#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acceval/av_plant.hpp"
#include "acceval/scenario_model.hpp"

namespace acceval {

inline constexpr double kMetersPerMile = 1609.344;

/// Naturalistic-driving counts behind the default miles-per-lane-change.
inline constexpr double kNaturalisticMiles = 1'325'964.0;
inline constexpr double kNaturalisticLaneChanges = 173'592.0;

/// Miles driven per negative-range-rate lane change.
constexpr double default_r_lc() noexcept { return kNaturalisticMiles / kNaturalisticLaneChanges; }

/// Running sums of weighted samples y = indicator * likelihood. Merging adds
/// fields, so any partition of a stream merged back gives identical sums when
/// the partition order matches.
struct EstimatorAccumulator {
  std::uint64_t n = 0;
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double distance_m = 0.0;
  double w_min = kInfinity;
  double w_max = -kInfinity;

  double mean() const noexcept;
  /// Unbiased sample variance of the weighted samples; exactly 0 when every
  /// sample was identical.
  double sample_variance() const noexcept;

  bool operator==(const EstimatorAccumulator&) const = default;
};

/// Adds one sample. Throws std::invalid_argument on likelihood <= 0,
/// indicator outside [0, 1] or negative distance.
EstimatorAccumulator update(EstimatorAccumulator acc, double indicator, double likelihood,
                            double distance_m);

EstimatorAccumulator merge(const EstimatorAccumulator& a, const EstimatorAccumulator& b) noexcept;

struct ConfidenceSpec {
  double alpha = 0.2;
  double beta = 0.2;

  void validate() const;
};

/// Two-sided standard normal quantile Phi^-1(1 - alpha/2).
double z_alpha(double alpha);

/// z * s / (mean * sqrt(n)); nullopt while not yet estimable (n < 2 or mean 0).
std::optional<double> relative_half_width(const EstimatorAccumulator& acc,
                                          const ConfidenceSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// mean -/+ z * s / sqrt(n).
Interval confidence_interval(const EstimatorAccumulator& acc, const ConfidenceSpec& spec);

/// Crude Monte Carlo sample size for relative half-width beta at probability gamma.
std::uint64_t required_n_cmc(double gamma, const ConfidenceSpec& spec);

enum class DeltaVUnit { MetersPerSecond, KilometersPerHour };

/// Logistic MAIS2+ risk in impact speed. Defaults are the Kusano-Gabler
/// coefficients; the unit of delta_v they expect is unverified.
struct InjuryModel {
  double b0 = -6.068;
  double b1 = 0.1;
  double b2 = -0.6234;
  DeltaVUnit unit = DeltaVUnit::MetersPerSecond;
};

/// 0 without a crash (nullopt); otherwise the logistic risk at delta_v (m/s,
/// converted to the model's unit).
double injury_probability(std::optional<double> delta_v_mps, const InjuryModel& m) noexcept;

struct AcceleratedRate {
  double d_nature_mi = 0.0;
  double d_acc_mi = 0.0;
  double r_acc = 0.0;
};

/// D_nature = r_lc * n_nature, D_acc = d_acc_m in miles, r_acc = D_nature / D_acc.
AcceleratedRate accelerated_rate(double n_nature, double r_lc, double d_acc_m);

enum class EventType { Conflict, Crash, Injury };
enum class SamplingMode { Cmc, Is };

std::string_view to_string(EventType e) noexcept;
std::string_view to_string(SamplingMode m) noexcept;
EventType parse_event(std::string_view s);
SamplingMode parse_mode(std::string_view s);

/// Indicator (or injury probability) of `event` for a finished trace.
double event_value(EventType event, const SimTrace& trace, const AvConfig& cfg,
                   const InjuryModel& injury) noexcept;

/// Signed distance to the event, used for intermediate CE levels: the
/// conflict score is min_range - r_conflict, the crash/injury score is the
/// minimum TTC of the run. An event implies a nonpositive score.
double criticality_score(EventType event, const SimTrace& trace, const AvConfig& cfg) noexcept;

/// Simulated distance that counts toward accelerated miles: the run stops at
/// the first conflict for conflict events, at impact otherwise.
double event_distance(EventType event, const SimTrace& trace) noexcept;

/// One row of convergence.csv.
struct ConvergencePoint {
  std::uint64_t n = 0;
  double estimate = 0.0;
  std::optional<double> rel_half_width;
  double sample_variance = 0.0;
};

/// Per-scenario record kept for scenario logs.
struct ScenarioRecord {
  std::uint64_t index = 0;
  ScenarioSample sample;
  EventRecord events;
  double min_range = 0.0;
  double distance = 0.0;
  double value = 0.0;
};

struct EstimationRequest {
  const ScenarioModel* model = nullptr;
  const AvConfig* plant = nullptr;
  InjuryModel injury;
  std::string bin;
  EventType event = EventType::Conflict;
  /// nullopt = crude Monte Carlo under the original laws.
  std::optional<ProposalParams> proposal;
  ConfidenceSpec spec;
  std::uint64_t n_cap = 100'000;
  std::uint64_t batch = 50;
  std::uint64_t min_samples = 100;
  std::uint64_t seed = 0;
  std::uint32_t stream_tag = 0;
  unsigned workers = 1;
  bool keep_records = false;
};

struct EstimationResult {
  EstimatorAccumulator acc;
  bool converged = false;
  std::vector<ConvergencePoint> convergence;
  std::vector<ScenarioRecord> records;
};

/// Sequential estimation: batches of scenarios are simulated in parallel,
/// reduced in index order, and the relative half-width is checked after
/// every batch once min_samples is reached. Stops at l_r < beta or n_cap.
/// Scenario i always uses RandomStream(seed, {stream_tag, i}), so results do
/// not depend on `workers`.
EstimationResult run_estimation(const EstimationRequest& req);

}  // namespace acceval
