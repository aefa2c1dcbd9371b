// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acceval/config.hpp"
#include "acceval/cross_entropy.hpp"
#include "acceval/experiment.hpp"
#include "oracles.hpp"

using namespace acceval;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kSeTolerance = 3.0;           // analytic IS, standard errors
constexpr double kCmcSpeedup = 10.0;           // IS stop vs CMC prediction
constexpr double kZeroVarRel = 1e-12;
constexpr double kDominance = 5.0;             // |normalized tilt| ratio
constexpr double kDensityTol = 1e-6;
constexpr double kRoundTripTol = 1e-9;
constexpr double kInjuryAtZero = 1.24e-3;
constexpr double kInjuryAtZeroTol = 5e-6;
constexpr double kInjuryHalf = 66.914;
constexpr double kInjuryHalfTol = 1e-3;
constexpr double kAnalyticBudgetS = 10.0;
constexpr double kZeroVarBudgetS = 1.0;
constexpr double kAgreementBudgetS = 60.0;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void criterion(const char* name, const std::function<Check()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += c.ok ? 0 : 1;
  std::printf("%s  %-34s %6.2fs  %s\n", c.ok ? "PASS" : "FAIL", name, s, c.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const ScenarioModel& model() {
  static const ScenarioModel m = ModelConfig::defaults().build();
  return m;
}

// Exp(1) tail {X > 7} estimated with a tilted exponential.
Check analytic_is() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const TruncatedExponential base(1.0);
  const double threshold = 7.0;
  const double gamma = std::exp(-threshold);
  const ConfidenceSpec spec;

  CeOptions ce;
  ce.n_per_iter = 1000;
  ce.seed = 1;
  const double tilt = ce_search_tail(base, threshold, ce).back();
  const auto proposal = tilt_exponential(base, tilt);

  auto draw = [&](std::uint64_t i, EstimatorAccumulator acc) {
    RandomStream rng(2, {7, i});
    const double x = proposal.quantile(rng.uniform());
    return update(acc, x > threshold ? 1.0 : 0.0, std::exp(exponential_log_ratio(base, proposal, x)), 0.0);
  };

  EstimatorAccumulator fixed;
  for (std::uint64_t i = 0; i < 10000; ++i) fixed = draw(i, fixed);
  const double se = std::sqrt(fixed.sample_variance() / 1e4);
  const double z = std::abs(fixed.mean() - gamma) / se;
  c.require(z <= kSeTolerance, fmt::format("|est - gamma| = {:.2f} SE", z));

  // Same stopping rule as the pipeline: every 50 samples, at least 100.
  EstimatorAccumulator seq;
  std::uint64_t n_stop = 0;
  for (std::uint64_t i = 0; i < 100000 && n_stop == 0; ++i) {
    seq = draw(i, seq);
    if (seq.n % 50 == 0 && seq.n >= 100) {
      const auto lr = relative_half_width(seq, spec);
      if (lr && *lr < spec.beta) n_stop = seq.n;
    }
  }
  const auto n_cmc = required_n_cmc(gamma, spec);
  c.require(n_stop > 0, "never reached l_r < 0.2");
  c.require(static_cast<double>(n_stop) * kCmcSpeedup <= static_cast<double>(n_cmc),
            fmt::format("N_stop {} not 10x below {}", n_stop, n_cmc));
  const double elapsed = seconds_since(t0);
  c.require(elapsed < kAnalyticBudgetS, "over time budget");
  c.detail = fmt::format("tilt {:.3f}, est {:.4e} vs {:.4e} ({:.2f} SE), N_stop {} (+{} CE) vs CMC {}{}",
                         tilt, fixed.mean(), gamma, z, n_stop, ce.n_per_iter * ce.iterations, n_cmc,
                         c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check zero_variance() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const TruncatedExponential base(1.0);
  const TruncatedExponential conditional(1.0, 7.0);
  const double gamma = std::exp(-7.0);
  EstimatorAccumulator acc;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    RandomStream rng(3, {7, i});
    const double x = conditional.quantile(rng.uniform());
    const double w = std::exp(exponential_log_ratio(base, conditional, x));
    worst = std::max(worst, std::abs(w - gamma) / gamma);
    acc = update(acc, x > 7.0 ? 1.0 : 0.0, w, 0.0);
  }
  const auto lr = relative_half_width(acc, {});
  c.require(worst <= kZeroVarRel, fmt::format("max rel dev {:.3g}", worst));
  c.require(lr && *lr == 0.0, "l_r != 0");
  c.require(seconds_since(t0) < kZeroVarBudgetS, "over time budget");
  c.detail = fmt::format("max rel dev {:.2g}, l_r {}", worst, lr ? *lr : -1.0) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check cmc_formula() {
  Check c;
  const auto n = required_n_cmc(0.1, {0.2, 0.2});
  c.require(n == 370, fmt::format("got {}", n));
  if (c.ok) c.detail = "370 (published run stopped at 364)";
  return c;
}

// Conflict CMC and IS intervals overlap in the low-speed bin for seeds 1..5.
Check cmc_is_agreement() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  std::string parts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = parse_config(fmt::format(
        R"({{"seed": {}, "events": ["conflict"], "modes": ["cmc", "is"], "bins": ["low"]}})", seed));
    const auto rep = run_experiment(cfg, {Stage::Run, 0});
    c.require(rep.errors.empty(), fmt::format("seed {} errors", seed));
    if (rep.rows.size() != 2) {
      c.require(false, "missing rows");
      continue;
    }
    const auto& cmc = rep.rows[0].mode == SamplingMode::Cmc ? rep.rows[0] : rep.rows[1];
    const auto& is = rep.rows[0].mode == SamplingMode::Cmc ? rep.rows[1] : rep.rows[0];
    const bool overlap = cmc.ci.lo <= is.ci.hi && is.ci.lo <= cmc.ci.hi;
    c.require(cmc.result.converged && is.result.converged, fmt::format("seed {} not converged", seed));
    c.require(overlap, fmt::format("seed {} disjoint", seed));
    parts += fmt::format(" s{}: cmc {:.4f}[{}] is {:.4f}[{}]", seed, cmc.result.acc.mean(),
                         cmc.result.acc.n, is.result.acc.mean(), is.result.acc.n);
  }
  c.require(seconds_since(t0) < kAgreementBudgetS, "over time budget");
  c.detail = parts.substr(1) + (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

// Normalized tilt: vartheta over the original mean it shifts.
Check ce_qualitative() {
  Check c;
  std::string parts;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto cfg = parse_config(
        fmt::format(R"({{"seed": {}, "events": ["conflict", "crash"], "modes": ["is"]}})", seed));
    const auto rep = run_experiment(cfg, {Stage::Search, 0});
    c.require(rep.errors.empty(), fmt::format("seed {} errors", seed));
    for (const auto& s : rep.searches) {
      const auto& bin = model().bin(s.bin);
      const double nr = s.params.vartheta_r / model().lambda_r();
      const double nt = s.params.vartheta_ttc / model().min_lambda_ttc(bin.lo, bin.hi);
      const auto tag = fmt::format("seed {} {} {}", seed, to_string(s.event), s.bin);
      if (s.event == EventType::Conflict) {
        c.require(nr < 0.0 && std::abs(nr) > kDominance * std::abs(nt), tag);
      } else {
        c.require(nt < 0.0 && std::abs(nt) > kDominance * std::abs(nr), tag);
      }
      if (seed == 1) parts += fmt::format(" {}/{}: ({:.2f}, {:.2f})", to_string(s.event), s.bin, nr, nt);
    }
  }
  c.detail = "normalized (R, TTC) seed 1:" + parts + (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check plant_closed_form() {
  Check c;
  AvConfig cfg;
  cfg.kp_acc = 0.0;
  cfg.ki_acc = 0.0;
  cfg.ttc_aeb_schedule = {{0.0, 0.0}, {40.0, 0.0}};
  const auto sc = make_scenario(10.0, 0.25, 0.5);
  c.require(sc.r0 == 4.0 && sc.v0 - sc.v_l == 2.0, "scenario setup");
  const auto tr = simulate(sc, cfg);
  c.require(tr.outcome == Outcome::Crash, "no crash");
  c.require(std::abs(tr.t_end - 2.0) <= cfg.ts + 1e-12, fmt::format("t_crash {}", tr.t_end));
  c.require(tr.delta_v == 2.0, fmt::format("delta_v {}", tr.delta_v));
  c.detail = fmt::format("t_crash {} s, delta_v {} m/s", tr.t_end, tr.delta_v) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check injury_model() {
  Check c;
  const InjuryModel m;
  const double p0 = injury_probability(0.0, m);
  const double half = oracle::bisect([&](double dv) { return injury_probability(dv, m) - 0.5; }, 0.0, 200.0);
  c.require(injury_probability(std::nullopt, m) == 0.0, "no-crash branch");
  c.require(std::abs(p0 - kInjuryAtZero) <= kInjuryAtZeroTol, fmt::format("P(0) {}", p0));
  c.require(std::abs(half - kInjuryHalf) <= kInjuryHalfTol, fmt::format("P=0.5 at {}", half));

  // Shared crash/injury stream in every bin, with the crash CE tilt.
  const AvConfig plant;
  std::size_t compared = 0;
  for (const auto& bin : model().bins()) {
    CeOptions ce;
    ce.n_per_iter = 500;
    ce.seed = 4;
    ce.workers = 0;
    const auto tilt = ce_search(model(), plant, bin.name, EventType::Crash, ce).params;
    EstimationRequest req;
    req.model = &model();
    req.plant = &plant;
    req.bin = bin.name;
    req.proposal = tilt;
    req.n_cap = 3000;
    req.min_samples = 3000;
    req.seed = 4;
    req.workers = 0;
    req.keep_records = true;
    req.event = EventType::Crash;
    const auto crash = run_estimation(req);
    req.event = EventType::Injury;
    const auto injury = run_estimation(req);
    for (std::size_t i = 0; i < crash.records.size(); ++i) {
      c.require(injury.records[i].value <= crash.records[i].value, "pointwise injury > crash");
      ++compared;
    }
    c.require(injury.acc.mean() <= crash.acc.mean(), bin.name + " injury > crash");
  }
  c.detail = fmt::format("P(0) {:.5e}, P=0.5 at {:.4f} m/s, {} paired samples", p0, half, compared) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check accounting() {
  Check c;
  const double r_lc = default_r_lc();
  c.require(std::round(r_lc * 100.0) / 100.0 == 7.64, fmt::format("r_lc {}", r_lc));

  // Published conflict column, three significant digits each.
  const double lo = 4.525e4 / 16.45, hi = 4.535e4 / 16.35;
  c.require(lo <= 2.775e3 && hi >= 2.765e3, "published ratio outside rounding envelope");

  // The report's own fields divide exactly.
  const auto cfg = parse_config(R"({"seed": 3, "bins": ["low"], "modes": ["cmc", "is"]})");
  const auto dir = fs::temp_directory_path() / "acceval_acceptance_accounting";
  fs::remove_all(dir);
  write_report(run_experiment(cfg, {Stage::Run, 0}), dir);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  for (const auto& row : summary.at("results")) {
    if (row.at("r_acc").is_null()) {
      c.require(false, "missing r_acc");
      continue;
    }
    const double dn = row.at("d_nature_mi").get<double>();
    const double da = row.at("d_acc_mi").get<double>();
    c.require(row.at("r_acc").get<double>() == dn / da, "r_acc != D_nature / D_acc");
    c.require(dn == r_lc * row.at("n_nature").get<double>(), "D_nature != r_lc * N_nature");
  }
  fs::remove_all(dir);

  const auto tr = simulate(make_scenario(20.0, 1.0 / 40.0, 0.0), AvConfig{});
  c.require(tr.distance == 160.0, fmt::format("one test {} m", tr.distance));
  c.detail = fmt::format("r_lc {:.4f}, published envelope [{:.0f}, {:.0f}], 8 s @ 20 m/s = {} m", r_lc,
                         lo, hi, tr.distance) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check determinism() {
  Check c;
  const auto cfg = parse_config(
      R"({"seed": 11, "events": ["conflict", "crash", "injury"], "modes": ["cmc", "is"],
          "estimation": {"n_cap": 3000}, "verbose_traces": true})");
  const auto a = fs::temp_directory_path() / "acceval_acceptance_w1";
  const auto b = fs::temp_directory_path() / "acceval_acceptance_w4";
  fs::remove_all(a);
  fs::remove_all(b);
  write_report(run_experiment(cfg, {Stage::Run, 1}), a);
  write_report(run_experiment(cfg, {Stage::Run, 4}), b);
  std::size_t files = 0, bytes = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto other = b / entry.path().filename();
    const auto text = slurp(entry.path());
    c.require(fs::exists(other) && text == slurp(other), entry.path().filename().string());
    ++files;
    bytes += text.size();
  }
  c.require(files == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), {})),
            "file sets differ");
  fs::remove_all(a);
  fs::remove_all(b);
  c.detail = fmt::format("{} files, {} bytes identical for 1 vs 4 workers", files, bytes) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

Check properties() {
  Check c;
  // Density normalization and CDF round trips.
  const TruncatedPareto pareto(0.3, 0.0097, 1.0 / 75.0, 1.0 / 75.0, 10.0);
  const double mass_p = oracle::simpson_log([&](double x) { return pareto.pdf(x); }, pareto.lo(),
                                            pareto.hi(), 1e-6, 400000);
  c.require(std::abs(mass_p - 1.0) < kDensityTol, fmt::format("pareto mass {}", mass_p));
  const TruncatedExponential expo(0.04, 0.01, 2.0);
  const double mass_e = oracle::simpson([&](double x) { return expo.pdf(x); }, expo.lo(), expo.hi(), 200000);
  c.require(std::abs(mass_e - 1.0) < kDensityTol, fmt::format("exp mass {}", mass_e));
  double worst_rt = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double u = i / 1000.0;
    worst_rt = std::max(worst_rt, std::abs(pareto.cdf(pareto.quantile(u)) - u));
    worst_rt = std::max(worst_rt, std::abs(expo.cdf(expo.quantile(u)) - u));
  }
  c.require(worst_rt < kRoundTripTol, fmt::format("cdf round trip {}", worst_rt));

  // Merge associativity with exactly representable partial sums.
  auto acc_of = [](std::initializer_list<double> ws) {
    EstimatorAccumulator a;
    for (double w : ws) a = update(a, w > 0.0 ? 1.0 : 0.0, w > 0.0 ? w : 1.0, 0.5);
    return a;
  };
  const auto x = acc_of({0.5, 0.0}), y = acc_of({0.25, 1.0, 0.0}), z = acc_of({2.0});
  c.require(merge(merge(x, y), z) == merge(x, merge(y, z)), "merge associativity");
  c.require(merge(x, y) == merge(y, x), "merge commutativity");

  // Plant invariants on sampled scenarios from every bin.
  const AvConfig cfg;
  std::size_t runs = 0, aeb_runs = 0;
  for (const auto& bin : model().bins()) {
    const ProposalParams p{-0.1, -0.3, bin.name};
    for (std::uint64_t i = 0; i < 300; ++i) {
      RandomStream rng(6, {5, i});
      const auto tr = simulate(sample_scenario(model(), &p, bin, rng), cfg, true);
      const auto& st = tr.states;
      bool aeb = false;
      for (std::size_t k = 1; k < st.size(); ++k) {
        if (st[k - 1].mode == DriveMode::Aeb && st[k].mode != DriveMode::Aeb) c.require(false, "mode latch");
        if (st[k].mode == DriveMode::Aeb) {
          aeb = true;
          if (st[k].a_cmd - st[k - 1].a_cmd < cfg.r_aeb * cfg.ts - 1e-12) c.require(false, "AEB rate");
          if (st[k].a_cmd < -cfg.a_aeb) c.require(false, "AEB floor");
        } else if (std::abs(st[k].a_cmd) > cfg.a_acc_max) {
          c.require(false, "ACC saturation");
        }
      }
      const auto e = classify_events(tr, cfg);
      if (e.crash && !e.conflict) c.require(false, "crash without conflict");
      ++runs;
      aeb_runs += aeb;
    }
  }
  c.detail = fmt::format("masses {:.9f}/{:.9f}, round trip {:.1e}, {} plant runs ({} with AEB)", mass_p,
                         mass_e, worst_rt, runs, aeb_runs) +
             (c.detail.empty() ? "" : " | " + c.detail);
  return c;
}

}  // namespace

int main() {
  criterion("analytic-is-unbiased", analytic_is);
  criterion("zero-variance-proposal", zero_variance);
  criterion("cmc-sample-size-formula", cmc_formula);
  criterion("cmc-is-agreement", cmc_is_agreement);
  criterion("ce-qualitative", ce_qualitative);
  criterion("plant-closed-form", plant_closed_form);
  criterion("injury-model", injury_model);
  criterion("accounting-identities", accounting);
  criterion("determinism-across-workers", determinism);
  criterion("property-suites", properties);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
