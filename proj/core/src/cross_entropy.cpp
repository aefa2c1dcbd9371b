#include "acceval/cross_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "acceval/errors.hpp"
#include "acceval/parallel.hpp"

namespace acceval {

namespace {

double clamp_tilt(double vartheta, double lambda, double margin) {
  return std::min(vartheta, (1.0 - margin) * lambda);
}

std::uint64_t elite_count(double fraction, std::uint64_t n) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(n))));
}

}  // namespace

CeTilts ce_update(std::span<const CeSample> samples, double lambda_r, double lambda_ttc_ref,
                  double margin) {
  double sum_w = 0.0;
  double sum_r = 0.0;
  double sum_ttc = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight >= 0.0)) throw std::invalid_argument("ce_update: weights must be >= 0");
    sum_w += s.weight;
    sum_r += s.weight * (lambda_r - s.r_inv);
    sum_ttc += s.weight * (s.lambda_ttc - s.ttc_inv);
  }
  if (!(sum_w > 0.0)) {
    throw NoEventError("ce_update: no event observed (all weights zero); increase n_per_iter "
                       "or warm-start the tilts");
  }
  return {clamp_tilt(sum_r / sum_w, lambda_r, margin),
          clamp_tilt(sum_ttc / sum_w, lambda_ttc_ref, margin)};
}

CeState ce_search(const ScenarioModel& model, const AvConfig& plant, const std::string& bin_name,
                  EventType event, const CeOptions& options) {
  if (options.n_per_iter == 0 || options.iterations <= 0) {
    throw std::invalid_argument("ce_search: n_per_iter and iterations must be positive");
  }
  const auto& bin = model.bin(bin_name);
  const double lambda_r = model.lambda_r();
  const double lambda_ttc_ref = model.min_lambda_ttc(bin.lo, bin.hi);
  const EventType indicator_event = event == EventType::Injury ? EventType::Crash : event;

  CeState state;
  state.params.bin = bin.name;
  state.n_per_iter = options.n_per_iter;

  struct Draw {
    CeSample ce;
    double likelihood = 0.0;
    double score = 0.0;
    bool hit = false;
  };
  std::vector<Draw> draws(options.n_per_iter);
  int zero_streak = 0;

  for (int it = 1; it <= options.iterations; ++it) {
    const ProposalParams current = state.params;
    validate_proposal(model, current);
    const std::uint32_t tag = options.stream_tag + static_cast<std::uint32_t>(it);

    parallel_for(draws.size(), options.workers, [&](std::size_t j) {
      RandomStream rng(options.seed, StreamId{tag, j});
      const auto s = sample_scenario(model, &current, bin, rng);
      const auto trace = simulate(s, plant);
      auto& d = draws[j];
      d.ce = {s.r_inv, s.ttc_inv, model.lambda_ttc(s.v_l), 0.0};
      d.likelihood = s.likelihood;
      d.score = criticality_score(indicator_event, trace, plant);
      d.hit = event_value(indicator_event, trace, plant, InjuryModel{}) > 0.0;
    });

    std::uint64_t hits = 0;
    for (const auto& d : draws) hits += d.hit ? 1 : 0;

    const std::uint64_t elite = elite_count(options.elite_fraction, draws.size());
    const bool adaptive = options.elite_fraction > 0.0 && hits < elite;
    double level = 0.0;
    if (adaptive) {
      std::vector<double> scores;
      scores.reserve(draws.size());
      for (const auto& d : draws) scores.push_back(d.score);
      std::nth_element(scores.begin(), scores.begin() + static_cast<long>(elite - 1), scores.end());
      level = scores[elite - 1];
    }

    std::vector<CeSample> weighted;
    weighted.reserve(draws.size());
    for (const auto& d : draws) {
      const bool selected = d.hit || (adaptive && d.score <= level);
      CeSample s = d.ce;
      s.weight = selected ? d.likelihood : 0.0;
      weighted.push_back(s);
    }

    if (!adaptive && hits == 0) {
      if (++zero_streak >= options.max_zero_hit) {
        throw NoEventError("ce_search: " + std::to_string(zero_streak) +
                           " consecutive iterations without a " +
                           std::string(to_string(indicator_event)) + " event in bin '" + bin.name +
                           "' (n_per_iter=" + std::to_string(options.n_per_iter) +
                           "); increase n_per_iter or warm-start the tilts");
      }
    } else {
      zero_streak = 0;
      const auto tilts = ce_update(weighted, lambda_r, lambda_ttc_ref, options.margin);
      state.params.vartheta_r = tilts.vartheta_r;
      state.params.vartheta_ttc = tilts.vartheta_ttc;
    }

    state.iteration = it;
    state.event_hits = hits;
    state.history.push_back(
        {it, state.params.vartheta_r, state.params.vartheta_ttc, hits, options.n_per_iter});
  }
  return state;
}

std::vector<double> ce_search_tail(const TruncatedExponential& base, double threshold,
                                   const CeOptions& options) {
  if (options.n_per_iter == 0 || options.iterations <= 0) {
    throw std::invalid_argument("ce_search_tail: n_per_iter and iterations must be positive");
  }
  const double lambda = base.mean_parameter();
  double vartheta = 0.0;
  std::vector<double> history;
  std::vector<double> xs(options.n_per_iter);
  std::vector<double> ls(options.n_per_iter);
  int zero_streak = 0;

  for (int it = 1; it <= options.iterations; ++it) {
    const auto proposal = tilt_exponential(base, vartheta);
    const std::uint32_t tag = options.stream_tag + static_cast<std::uint32_t>(it);
    std::uint64_t hits = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      RandomStream rng(options.seed, StreamId{tag, j});
      xs[j] = proposal.quantile(rng.uniform());
      ls[j] = std::exp(exponential_log_ratio(base, proposal, xs[j]));
      hits += xs[j] > threshold ? 1 : 0;
    }

    const std::uint64_t elite = elite_count(options.elite_fraction, xs.size());
    const bool adaptive = options.elite_fraction > 0.0 && hits < elite;
    double level = threshold;
    if (adaptive) {
      std::vector<double> sorted = xs;
      std::nth_element(sorted.begin(), sorted.end() - static_cast<long>(elite), sorted.end());
      level = *(sorted.end() - static_cast<long>(elite));
    }

    double sum_w = 0.0;
    double sum_shift = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const bool selected = adaptive ? xs[j] >= level : xs[j] > threshold;
      if (!selected) continue;
      sum_w += ls[j];
      sum_shift += ls[j] * (lambda - xs[j]);
    }
    if (sum_w > 0.0) {
      zero_streak = 0;
      vartheta = clamp_tilt(sum_shift / sum_w, lambda, options.margin);
    } else if (++zero_streak >= options.max_zero_hit) {
      throw NoEventError("ce_search_tail: no tail events in " + std::to_string(zero_streak) +
                         " consecutive iterations");
    }
    history.push_back(vartheta);
  }
  return history;
}

}  // namespace acceval
