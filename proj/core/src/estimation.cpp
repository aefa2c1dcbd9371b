#include "acceval/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "acceval/parallel.hpp"

namespace acceval {

double EstimatorAccumulator::mean() const noexcept {
  return n == 0 ? 0.0 : sum_w / static_cast<double>(n);
}

double EstimatorAccumulator::sample_variance() const noexcept {
  if (n < 2 || w_min == w_max) return 0.0;
  const double nn = static_cast<double>(n);
  const double m = sum_w / nn;
  return std::max(0.0, (sum_w2 - nn * m * m) / (nn - 1.0));
}

EstimatorAccumulator update(EstimatorAccumulator acc, double indicator, double likelihood,
                            double distance_m) {
  if (!(likelihood > 0.0) || !std::isfinite(likelihood)) {
    throw std::invalid_argument("update: likelihood must be positive and finite");
  }
  if (!(indicator >= 0.0 && indicator <= 1.0)) {
    throw std::invalid_argument("update: indicator must lie in [0, 1]");
  }
  if (!(distance_m >= 0.0)) throw std::invalid_argument("update: distance must be >= 0");
  const double w = indicator * likelihood;
  acc.n += 1;
  acc.sum_w += w;
  acc.sum_w2 += w * w;
  acc.distance_m += distance_m;
  acc.w_min = std::min(acc.w_min, w);
  acc.w_max = std::max(acc.w_max, w);
  return acc;
}

EstimatorAccumulator merge(const EstimatorAccumulator& a, const EstimatorAccumulator& b) noexcept {
  EstimatorAccumulator out;
  out.n = a.n + b.n;
  out.sum_w = a.sum_w + b.sum_w;
  out.sum_w2 = a.sum_w2 + b.sum_w2;
  out.distance_m = a.distance_m + b.distance_m;
  out.w_min = std::min(a.w_min, b.w_min);
  out.w_max = std::max(a.w_max, b.w_max);
  return out;
}

void ConfidenceSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("confidence.alpha must be in (0, 1)");
  if (!(beta > 0.0)) throw std::invalid_argument("confidence.beta must be > 0");
}

double z_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("z_alpha: alpha must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

std::optional<double> relative_half_width(const EstimatorAccumulator& acc,
                                          const ConfidenceSpec& spec) {
  const double m = acc.mean();
  if (acc.n < 2 || !(m > 0.0)) return std::nullopt;
  const double s = std::sqrt(acc.sample_variance());
  return z_alpha(spec.alpha) * s / (m * std::sqrt(static_cast<double>(acc.n)));
}

Interval confidence_interval(const EstimatorAccumulator& acc, const ConfidenceSpec& spec) {
  const double m = acc.mean();
  if (acc.n < 2) return {m, m};
  const double half = z_alpha(spec.alpha) * std::sqrt(acc.sample_variance() /
                                                      static_cast<double>(acc.n));
  return {m - half, m + half};
}

std::uint64_t required_n_cmc(double gamma, const ConfidenceSpec& spec) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("required_n_cmc: gamma must be in (0, 1)");
  spec.validate();
  const double z = z_alpha(spec.alpha);
  return static_cast<std::uint64_t>(std::ceil(z * z / (spec.beta * spec.beta) * (1.0 - gamma) / gamma));
}

double injury_probability(std::optional<double> delta_v_mps, const InjuryModel& m) noexcept {
  if (!delta_v_mps) return 0.0;
  const double dv = m.unit == DeltaVUnit::KilometersPerHour ? *delta_v_mps * 3.6 : *delta_v_mps;
  return 1.0 / (1.0 + std::exp(-(m.b0 + m.b1 * dv + m.b2)));
}

AcceleratedRate accelerated_rate(double n_nature, double r_lc, double d_acc_m) {
  if (!(d_acc_m > 0.0)) throw std::invalid_argument("accelerated_rate: accelerated distance must be > 0");
  AcceleratedRate r;
  r.d_nature_mi = r_lc * n_nature;
  r.d_acc_mi = d_acc_m / kMetersPerMile;
  r.r_acc = r.d_nature_mi / r.d_acc_mi;
  return r;
}

std::string_view to_string(EventType e) noexcept {
  switch (e) {
    case EventType::Conflict: return "conflict";
    case EventType::Crash: return "crash";
    case EventType::Injury: return "injury";
  }
  return "?";
}

std::string_view to_string(SamplingMode m) noexcept { return m == SamplingMode::Cmc ? "cmc" : "is"; }

EventType parse_event(std::string_view s) {
  if (s == "conflict") return EventType::Conflict;
  if (s == "crash") return EventType::Crash;
  if (s == "injury") return EventType::Injury;
  throw std::invalid_argument("unknown event '" + std::string(s) + "'");
}

SamplingMode parse_mode(std::string_view s) {
  if (s == "cmc") return SamplingMode::Cmc;
  if (s == "is") return SamplingMode::Is;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

double event_value(EventType event, const SimTrace& trace, const AvConfig& cfg,
                   const InjuryModel& injury) noexcept {
  const auto e = classify_events(trace, cfg);
  switch (event) {
    case EventType::Conflict: return e.conflict ? 1.0 : 0.0;
    case EventType::Crash: return e.crash ? 1.0 : 0.0;
    case EventType::Injury:
      return injury_probability(e.crash ? std::optional<double>(e.delta_v) : std::nullopt, injury);
  }
  return 0.0;
}

double criticality_score(EventType event, const SimTrace& trace, const AvConfig& cfg) noexcept {
  return event == EventType::Conflict ? trace.min_range - cfg.r_conflict
                                      : trace.min_ttc;
}

double event_distance(EventType event, const SimTrace& trace) noexcept {
  return event == EventType::Conflict ? trace.distance_to_conflict : trace.distance;
}

EstimationResult run_estimation(const EstimationRequest& req) {
  if (req.model == nullptr || req.plant == nullptr) {
    throw std::invalid_argument("run_estimation: model and plant are required");
  }
  if (req.batch == 0) throw std::invalid_argument("run_estimation: batch must be > 0");
  req.spec.validate();
  const auto& bin = req.model->bin(req.bin);
  if (req.proposal) validate_proposal(*req.model, *req.proposal);
  const ProposalParams* proposal = req.proposal ? &*req.proposal : nullptr;

  EstimationResult result;
  std::vector<ScenarioRecord> batch;
  while (result.acc.n < req.n_cap) {
    const std::uint64_t start = result.acc.n;
    const std::uint64_t count = std::min(req.batch, req.n_cap - start);
    batch.assign(count, ScenarioRecord{});
    parallel_for(count, req.workers, [&](std::size_t j) {
      const std::uint64_t index = start + j;
      RandomStream rng(req.seed, StreamId{req.stream_tag, index});
      auto& rec = batch[j];
      rec.index = index;
      rec.sample = sample_scenario(*req.model, proposal, bin, rng);
      const auto trace = simulate(rec.sample, *req.plant);
      rec.events = classify_events(trace, *req.plant);
      rec.min_range = trace.min_range;
      rec.distance = event_distance(req.event, trace);
      rec.value = event_value(req.event, trace, *req.plant, req.injury);
    });
    for (const auto& rec : batch) {
      result.acc = update(result.acc, rec.value, rec.sample.likelihood, rec.distance);
    }
    if (req.keep_records) result.records.insert(result.records.end(), batch.begin(), batch.end());

    const auto lr = relative_half_width(result.acc, req.spec);
    result.convergence.push_back(
        {result.acc.n, result.acc.mean(), lr, result.acc.sample_variance()});
    if (result.acc.n >= req.min_samples && lr && *lr < req.spec.beta) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace acceval
