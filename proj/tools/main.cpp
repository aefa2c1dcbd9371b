#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "acceval/config.hpp"
#include "acceval/errors.hpp"
#include "acceval/experiment.hpp"
#include "acceval/ingest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string event;
  std::string mode;
  std::string bin;
  std::string out;
  std::optional<std::uint64_t> n_cap;
  bool verbose_traces = false;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Overrides the config seed");
  cmd->add_option("--event", f.event, "Single event to run")
      ->check(CLI::IsMember({"conflict", "crash", "injury"}));
  cmd->add_option("--mode", f.mode, "Single sampling mode")->check(CLI::IsMember({"cmc", "is"}));
  cmd->add_option("--bin", f.bin, "Velocity bin name, or all");
  cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
  cmd->add_option("--n-cap", f.n_cap, "Sample cap per estimate")->check(CLI::PositiveNumber);
  cmd->add_flag("--verbose-traces", f.verbose_traces, "Write scenario logs and event traces");
  cmd->add_option("--workers", f.workers, "Simulation threads; never changes results")
      ->check(CLI::PositiveNumber);
}

acceval::ExperimentConfig resolve_config(const RunFlags& f) {
  acceval::ExperimentConfig cfg;
  if (!f.config.empty()) {
    cfg = acceval::load_config(f.config);
  } else {
    if (!f.seed) throw acceval::ConfigError("seed", "pass --seed or a --config with a seed");
    cfg = acceval::parse_config(fmt::format("{{\"seed\": {}}}", *f.seed));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.event.empty()) cfg.events = {acceval::parse_event(f.event)};
  if (!f.mode.empty()) cfg.modes = {acceval::parse_mode(f.mode)};
  if (!f.bin.empty()) {
    cfg.bins.clear();
    if (f.bin != "all") cfg.bins.push_back(f.bin);
  }
  if (f.n_cap) cfg.estimation.n_cap = *f.n_cap;
  if (f.verbose_traces) cfg.verbose_traces = true;
  const std::string out = f.out.empty() ? cfg.output_dir : f.out;
  // Re-validate with the overrides applied.
  cfg = acceval::parse_config(acceval::pretty_json(cfg));
  cfg.output_dir = out;
  return cfg;
}

int run_pipeline(const RunFlags& f, acceval::Stage stage) {
  const auto cfg = resolve_config(f);
  const auto report = acceval::run_experiment(cfg, {stage, f.workers});
  acceval::write_report(report, cfg.output_dir);
  std::cout << acceval::render_report(cfg.output_dir);
  for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
  if (!report.errors.empty()) return kExitError;
  return report.all_converged() ? kExitOk : kExitNotConverged;
}

int run_fit(const std::string& input, const std::string& out_path) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open '" + input + "'");
  const auto fit = acceval::fit_events(in);
  const auto& c = fit.counts;
  std::cout << fmt::format(
      "rows {}  kept {}  dropped: malformed {}, speed {}, range {}, nonnegative range rate {}\n",
      c.rows, c.kept, c.malformed, c.speed_out_of_range, c.range_out_of_range, c.nonnegative_rate);
  const auto& p = fit.r_inv_pareto;
  const auto& e = fit.r_inv_exponential;
  std::cout << fmt::format("R^-1 pareto      k={:.5g} sigma={:.5g} theta={:.5g}  loglik={:.6g} bic={:.6g}\n",
                           p.params[0], p.params[1], p.params[2], p.loglik, p.bic);
  std::cout << fmt::format("R^-1 exponential mean={:.5g} (shifted)          loglik={:.6g} bic={:.6g}\n",
                           e.params[0], e.loglik, e.bic);
  std::cout << fmt::format("preferred by BIC: {}\n", p.bic <= e.bic ? "pareto" : "exponential");
  for (const auto& b : fit.ttc_bands) {
    std::cout << fmt::format("TTC^-1 v_L [{:g}, {:g})  n={:<7} mean={:.5g}\n", b.v_lo, b.v_hi, b.n,
                             b.exponential.params[0]);
  }
  // Validates the fitted tables before anything is written.
  (void)fit.model.build();
  const auto text = acceval::model_json(fit.model);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw std::runtime_error("cannot write '" + out_path + "'");
    std::cout << "model section written to " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated evaluation of automated vehicles in lane-change cut-ins"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(acceval::library_version()));

  std::string fit_input;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "Fit the scenario model from a lane-change CSV");
  fit->add_option("input", fit_input, "CSV with columns v, v_l, r_l, r_l_dot")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "Where to write the model JSON section (default stdout)");

  RunFlags search_flags, estimate_flags, run_flags;
  auto* search = app.add_subcommand("search", "Cross-Entropy search for the IS tilts only");
  add_run_flags(search, search_flags);
  auto* estimate = app.add_subcommand("estimate", "CMC and/or IS estimation with warm-start tilts");
  add_run_flags(estimate, estimate_flags);
  auto* run = app.add_subcommand("run", "Full pipeline: search, estimate, report");
  add_run_flags(run, run_flags);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Re-render a written report directory");
  report->add_option("--out,dir", report_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*fit) return run_fit(fit_input, fit_out);
    if (*search) return run_pipeline(search_flags, acceval::Stage::Search);
    if (*estimate) return run_pipeline(estimate_flags, acceval::Stage::Estimate);
    if (*run) return run_pipeline(run_flags, acceval::Stage::Run);
    if (*report) {
      std::cout << acceval::render_report(report_dir);
      return kExitOk;
    }
  } catch (const acceval::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
