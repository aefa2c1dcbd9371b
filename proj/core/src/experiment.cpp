#include "acceval/experiment.hpp"

#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "acceval/errors.hpp"
#include "acceval/random_stream.hpp"

#ifndef ACCEVAL_VERSION
#define ACCEVAL_VERSION "0.0.0"
#endif

namespace acceval {

namespace {

// Scenarios per row whose full trajectories are kept in verbose mode.
constexpr std::size_t kMaxTracesPerRow = 20;

EventType search_family(EventType e) { return e == EventType::Conflict ? e : EventType::Crash; }

std::uint64_t n_per_iter(const CeConfig& ce, EventType family) {
  return family == EventType::Conflict ? ce.n_per_iter_conflict : ce.n_per_iter_crash;
}

}  // namespace

std::string_view library_version() noexcept { return ACCEVAL_VERSION; }

bool RunReport::all_converged() const noexcept {
  for (const auto& r : rows) {
    if (!r.result.converged) return false;
  }
  return true;
}

std::uint32_t stream_tag_for(StreamPurpose purpose, EventType event, std::size_t bin_index) noexcept {
  return make_stream_tag(static_cast<std::uint32_t>(purpose),
                         search_family(event) == EventType::Conflict ? 0u : 1u,
                         static_cast<std::uint32_t>(bin_index), 0);
}

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const ScenarioModel model = cfg.model.build();
  const AvConfig& plant = cfg.plant;

  RunReport report;
  report.provenance = {fmt::format("{:016x}", config_hash(cfg)), cfg.seed,
                       std::string(library_version())};
  report.config_json = pretty_json(cfg);
  report.r_lc = cfg.r_lc;
  report.confidence = cfg.confidence;
  report.verbose_traces = cfg.verbose_traces;

  const auto bins = cfg.selected_bins();
  const bool wants_is = [&] {
    for (auto m : cfg.modes) {
      if (m == SamplingMode::Is) return true;
    }
    return false;
  }();

  // (family, bin) -> index into report.searches; nullopt records a failure.
  std::map<std::pair<EventType, std::string>, std::optional<std::size_t>> searched;

  auto tilts_for = [&](EventType event, const std::string& bin) -> std::optional<ProposalParams> {
    const EventType family = search_family(event);
    const auto key = std::make_pair(family, bin);
    if (auto it = searched.find(key); it != searched.end()) {
      if (!it->second) return std::nullopt;
      return report.searches[*it->second].params;
    }

    SearchOutcome out;
    out.event = family;
    out.bin = bin;
    const auto family_name = std::string(to_string(family));
    const auto warm_event = cfg.warm_start.find(family_name);
    if (warm_event != cfg.warm_start.end()) {
      if (auto w = warm_event->second.find(bin); w != warm_event->second.end()) {
        out.warm_started = true;
        out.params = {w->second.vartheta_r, w->second.vartheta_ttc, bin};
      }
    }
    if (!out.warm_started) {
      if (options.stage == Stage::Estimate) {
        report.errors.push_back(fmt::format(
            "{} / {}: importance sampling needs warm_start.{}.{} in estimate mode; use the "
            "search or run subcommand to find tilts",
            family_name, bin, family_name, bin));
        searched[key] = std::nullopt;
        return std::nullopt;
      }
      CeOptions ce;
      ce.n_per_iter = n_per_iter(cfg.ce, family);
      ce.iterations = cfg.ce.iterations;
      ce.margin = cfg.ce.margin;
      ce.max_zero_hit = cfg.ce.max_zero_hit;
      ce.elite_fraction = cfg.ce.elite_fraction;
      ce.seed = cfg.seed;
      ce.stream_tag = stream_tag_for(StreamPurpose::CeSearch, family, model.bin_index(bin));
      ce.workers = options.workers;
      try {
        out.state = ce_search(model, plant, bin, family, ce);
        out.params = out.state->params;
      } catch (const NoEventError& e) {
        report.errors.push_back(fmt::format("{} / {}: {}", family_name, bin, e.what()));
        searched[key] = std::nullopt;
        return std::nullopt;
      }
    }
    report.searches.push_back(out);
    searched[key] = report.searches.size() - 1;
    return out.params;
  };

  for (const auto event : cfg.events) {
    for (const auto& bin : bins) {
      if (options.stage == Stage::Search || wants_is) (void)tilts_for(event, bin);
    }
  }
  if (options.stage == Stage::Search) return report;

  for (const auto event : cfg.events) {
    for (const auto& bin : bins) {
      for (const auto mode : cfg.modes) {
        RunRow row;
        row.event = event;
        row.mode = mode;
        row.bin = bin;
        if (mode == SamplingMode::Is) {
          row.proposal = tilts_for(event, bin);
          if (!row.proposal) continue;  // failure already recorded
        }
        row.stream_tag = stream_tag_for(
            mode == SamplingMode::Is ? StreamPurpose::Is : StreamPurpose::Cmc, event,
            model.bin_index(bin));

        EstimationRequest req;
        req.model = &model;
        req.plant = &plant;
        req.injury = cfg.injury;
        req.bin = bin;
        req.event = event;
        req.proposal = row.proposal;
        req.spec = cfg.confidence;
        req.n_cap = cfg.estimation.n_cap;
        req.batch = cfg.estimation.batch;
        req.min_samples = cfg.estimation.min_samples;
        req.seed = cfg.seed;
        req.stream_tag = row.stream_tag;
        req.workers = options.workers;
        req.keep_records = cfg.verbose_traces;
        row.result = run_estimation(req);
        row.ci = confidence_interval(row.result.acc, cfg.confidence);
        row.rel_half_width = relative_half_width(row.result.acc, cfg.confidence);

        if (cfg.verbose_traces) {
          for (const auto& rec : row.result.records) {
            if (row.traces.size() >= kMaxTracesPerRow) break;
            if (rec.value > 0.0) row.traces.emplace_back(rec.index, simulate(rec.sample, plant, true));
          }
        }
        report.rows.push_back(std::move(row));
      }
    }
  }

  // Naturalistic tests needed, then the accelerated rate for each row.
  for (auto& row : report.rows) {
    const double gamma = row.result.acc.mean();
    if (cfg.estimation.n_nature == NatureMode::Actual) {
      for (const auto& other : report.rows) {
        if (other.mode == SamplingMode::Cmc && other.event == row.event && other.bin == row.bin) {
          row.n_nature = static_cast<double>(other.result.acc.n);
          row.n_nature_source = "actual";
        }
      }
    }
    if (!row.n_nature && gamma > 0.0 && gamma < 1.0) {
      row.n_nature = static_cast<double>(required_n_cmc(gamma, cfg.confidence));
      row.n_nature_source = "predictive";
    }
    if (!row.n_nature) row.n_nature_source = "unavailable";
    if (row.n_nature && row.result.acc.distance_m > 0.0) {
      row.rate = accelerated_rate(*row.n_nature, cfg.r_lc, row.result.acc.distance_m);
    }
  }
  return report;
}

}  // namespace acceval
