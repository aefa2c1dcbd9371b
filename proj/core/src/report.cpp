#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acceval/experiment.hpp"

namespace acceval {

using nlohmann::ordered_json;

namespace {

// Shortest round-trip form; empty for missing values.
std::string num(double x) { return fmt::format("{}", x); }
std::string num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

ordered_json opt(const std::optional<double>& x) { return x ? ordered_json(*x) : ordered_json(nullptr); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string row_stem(std::string_view event, std::string_view mode, std::string_view bin) {
  return fmt::format("{}_{}_{}", event, mode, bin);
}

std::string convergence_csv(const EstimationResult& r) {
  std::string out = "n,estimate,rel_half_width,sample_variance\n";
  for (const auto& p : r.convergence) {
    out += fmt::format("{},{},{},{}\n", p.n, num(p.estimate), num(p.rel_half_width),
                       num(p.sample_variance));
  }
  return out;
}

std::string ce_history_csv(const CeState& s) {
  std::string out = "iteration,vartheta_r,vartheta_ttc,hits,n\n";
  for (const auto& h : s.history) {
    out += fmt::format("{},{},{},{},{}\n", h.iteration, num(h.vartheta_r), num(h.vartheta_ttc),
                       h.hits, h.n);
  }
  return out;
}

std::string scenarios_csv(const EstimationResult& r) {
  std::string out =
      "index,v_l,r_inv,ttc_inv,r0,rdot,v0,likelihood,conflict,crash,delta_v,min_range,distance,"
      "value\n";
  for (const auto& rec : r.records) {
    const auto& s = rec.sample;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", rec.index, num(s.v_l),
                       num(s.r_inv), num(s.ttc_inv), num(s.r0), num(s.rdot), num(s.v0),
                       num(s.likelihood), rec.events.conflict ? 1 : 0, rec.events.crash ? 1 : 0,
                       num(rec.events.delta_v), num(rec.min_range), num(rec.distance),
                       num(rec.value));
  }
  return out;
}

std::string traces_csv(const std::vector<std::pair<std::uint64_t, SimTrace>>& traces) {
  std::string out = "index,t,r,v,a_cmd,a,mode\n";
  for (const auto& [index, trace] : traces) {
    for (const auto& s : trace.states) {
      out += fmt::format("{},{},{},{},{},{},{}\n", index, num(s.t), num(s.r), num(s.v),
                         num(s.a_cmd), num(s.a), s.mode == DriveMode::Acc ? "acc" : "aeb");
    }
  }
  return out;
}

ordered_json summary_json(const RunReport& report) {
  ordered_json j;
  j["provenance"] = {{"config_hash", report.provenance.config_hash},
                     {"seed", report.provenance.seed},
                     {"version", report.provenance.version}};
  j["r_lc_mi"] = report.r_lc;
  j["confidence"] = {{"alpha", report.confidence.alpha}, {"beta", report.confidence.beta}};

  ordered_json searches = ordered_json::array();
  for (const auto& s : report.searches) {
    ordered_json e;
    e["event"] = to_string(s.event);
    e["bin"] = s.bin;
    e["source"] = s.warm_started ? "warm_start" : "cross_entropy";
    e["vartheta_r"] = s.params.vartheta_r;
    e["vartheta_ttc"] = s.params.vartheta_ttc;
    if (s.state) {
      e["iterations"] = s.state->iteration;
      e["n_per_iter"] = s.state->n_per_iter;
      e["last_hits"] = s.state->event_hits;
      e["history_file"] = fmt::format("ce_history_{}_{}.csv", to_string(s.event), s.bin);
    }
    searches.push_back(e);
  }
  j["searches"] = searches;

  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    const auto& acc = r.result.acc;
    ordered_json e;
    e["event"] = to_string(r.event);
    e["mode"] = to_string(r.mode);
    e["bin"] = r.bin;
    if (r.proposal) {
      e["vartheta_r"] = r.proposal->vartheta_r;
      e["vartheta_ttc"] = r.proposal->vartheta_ttc;
    }
    e["status"] = r.result.converged ? "converged" : "n_cap_reached";
    e["n"] = acc.n;
    e["estimate"] = acc.mean();
    e["ci_lo"] = r.ci.lo;
    e["ci_hi"] = r.ci.hi;
    e["rel_half_width"] = opt(r.rel_half_width);
    e["sample_variance"] = acc.sample_variance();
    e["n_nature"] = opt(r.n_nature);
    e["n_nature_source"] = r.n_nature_source;
    e["d_acc_m"] = acc.distance_m;
    if (r.rate) {
      e["d_nature_mi"] = r.rate->d_nature_mi;
      e["d_acc_mi"] = r.rate->d_acc_mi;
      e["r_acc"] = r.rate->r_acc;
    } else {
      e["d_nature_mi"] = nullptr;
      e["d_acc_mi"] = acc.distance_m / kMetersPerMile;
      e["r_acc"] = nullptr;
    }
    e["convergence_file"] =
        fmt::format("convergence_{}.csv", row_stem(to_string(r.event), to_string(r.mode), r.bin));
    rows.push_back(e);
  }
  j["results"] = rows;
  j["errors"] = report.errors;
  return j;
}

}  // namespace

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

  write_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
  write_file(dir / "config.json", report.config_json);
  for (const auto& s : report.searches) {
    if (!s.state) continue;
    write_file(dir / fmt::format("ce_history_{}_{}.csv", to_string(s.event), s.bin),
               ce_history_csv(*s.state));
  }
  for (const auto& r : report.rows) {
    const auto stem = row_stem(to_string(r.event), to_string(r.mode), r.bin);
    write_file(dir / fmt::format("convergence_{}.csv", stem), convergence_csv(r.result));
    if (report.verbose_traces) {
      write_file(dir / fmt::format("scenarios_{}.csv", stem), scenarios_csv(r.result));
      write_file(dir / fmt::format("traces_{}.csv", stem), traces_csv(r.traces));
    }
  }
}

std::string render_report(const std::filesystem::path& dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(dir / "summary.json"));
  } catch (const ordered_json::exception& e) {
    throw std::runtime_error("'" + (dir / "summary.json").string() + "': " + e.what());
  }

  auto text_or_dash = [](const ordered_json& v, const char* spec) -> std::string {
    if (v.is_null()) return "-";
    return fmt::format(fmt::runtime(spec), v.get<double>());
  };

  std::string out;
  const auto& p = j.at("provenance");
  out += fmt::format("config {}  seed {}  version {}\n", p.at("config_hash").get<std::string>(),
                     p.at("seed").get<std::uint64_t>(), p.at("version").get<std::string>());
  const double alpha = j.at("confidence").at("alpha").get<double>();
  out += fmt::format("{:<9}{:<5}{:<8}{:>9} {:>11} {:>25} {:>7} {:<14}{:>12} {:>10} {:>10}  {}\n",
                     "event", "mode", "bin", "n", "estimate",
                     fmt::format("{:.0f}% CI", 100.0 * (1.0 - alpha)), "l_r", "status",
                     "D_nature_mi", "D_acc_mi", "r_acc", "log");

  for (const auto& r : j.at("results")) {
    // Cross-check the summary against the last convergence row.
    std::string check = "?";
    const auto log = dir / r.at("convergence_file").get<std::string>();
    try {
      std::istringstream csv(read_file(log));
      std::string line, last;
      while (std::getline(csv, line)) {
        if (!line.empty()) last = line;
      }
      const auto c1 = last.find(',');
      const auto c2 = last.find(',', c1 + 1);
      const auto n = std::stoull(last.substr(0, c1));
      const double est = std::stod(last.substr(c1 + 1, c2 - c1 - 1));
      check = n == r.at("n").get<std::uint64_t>() && est == r.at("estimate").get<double>()
                  ? "ok"
                  : "MISMATCH";
    } catch (const std::exception&) {
      check = "missing";
    }
    out += fmt::format(
        "{:<9}{:<5}{:<8}{:>9} {:>11.4e} {:>25} {:>7} {:<14}{:>12} {:>10} {:>10}  {}\n",
        r.at("event").get<std::string>(), r.at("mode").get<std::string>(),
        r.at("bin").get<std::string>(), r.at("n").get<std::uint64_t>(),
        r.at("estimate").get<double>(),
        fmt::format("[{:.3e}, {:.3e}]", r.at("ci_lo").get<double>(), r.at("ci_hi").get<double>()),
        text_or_dash(r.at("rel_half_width"), "{:.3f}"), r.at("status").get<std::string>(),
        text_or_dash(r.at("d_nature_mi"), "{:.3e}"), text_or_dash(r.at("d_acc_mi"), "{:.3g}"),
        text_or_dash(r.at("r_acc"), "{:.3e}"), check);
  }
  for (const auto& s : j.at("searches")) {
    out += fmt::format("tilts {:<9}{:<8} vartheta_r {:>10.4f}  vartheta_ttc {:>10.4f}  ({})\n",
                       s.at("event").get<std::string>(), s.at("bin").get<std::string>(),
                       s.at("vartheta_r").get<double>(), s.at("vartheta_ttc").get<double>(),
                       s.at("source").get<std::string>());
  }
  for (const auto& e : j.at("errors")) out += "error: " + e.get<std::string>() + "\n";
  return out;
}

}  // namespace acceval
