#include "acceval/ingest.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acceval {

namespace {

constexpr double kSpeedLo = 2.0;
constexpr double kSpeedHi = 40.0;
constexpr double kRangeLo = 0.1;
constexpr double kRangeHi = 75.0;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool inside(double x, double lo, double hi) { return x > lo && x < hi; }

}  // namespace

bool passes_filters(const LaneChangeRecord& r, IngestCounts& counts) {
  if (!inside(r.v, kSpeedLo, kSpeedHi) || !inside(r.v_l, kSpeedLo, kSpeedHi)) {
    ++counts.speed_out_of_range;
    return false;
  }
  if (!inside(r.r_l, kRangeLo, kRangeHi)) {
    ++counts.range_out_of_range;
    return false;
  }
  if (!(r.r_l_dot < 0.0)) {
    ++counts.nonnegative_rate;
    return false;
  }
  ++counts.kept;
  return true;
}

std::vector<LaneChangeRecord> read_lane_changes(std::istream& in, IngestCounts& counts) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("event CSV is empty");
  const auto header = split(line);
  constexpr std::array<std::string_view, 4> names{"v", "v_l", "r_l", "r_l_dot"};
  std::array<std::size_t, 4> col{};
  for (std::size_t k = 0; k < names.size(); ++k) {
    col[k] = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == names[k]) col[k] = i;
    }
    if (col[k] == header.size()) {
      throw std::runtime_error("event CSV: missing column '" + std::string(names[k]) + "'");
    }
  }

  std::vector<LaneChangeRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++counts.rows;
    const auto fields = split(line);
    std::array<double, 4> x{};
    bool ok = true;
    for (std::size_t k = 0; k < 4 && ok; ++k) {
      ok = col[k] < fields.size() && parse_double(fields[col[k]], x[k]);
    }
    if (!ok) {
      ++counts.malformed;
      continue;
    }
    const LaneChangeRecord r{x[0], x[1], x[2], x[3]};
    if (passes_filters(r, counts)) out.push_back(r);
  }
  return out;
}

EventFit fit_events(std::istream& in, const FitOptions& options) {
  if (!(options.ttc_band_width > 0.0) || !(options.histogram_width > 0.0)) {
    throw std::invalid_argument("fit_events: band widths must be > 0");
  }
  EventFit fit;
  const auto records = read_lane_changes(in, fit.counts);
  if (records.size() < 10) {
    throw std::runtime_error("fit_events: only " + std::to_string(records.size()) +
                             " rows passed the filters; at least 10 are needed");
  }

  const double r_inv_lo = 1.0 / kRangeHi;
  std::vector<double> r_inv;
  std::vector<double> r_inv_shifted;
  for (const auto& r : records) {
    r_inv.push_back(1.0 / r.r_l);
    r_inv_shifted.push_back(1.0 / r.r_l - r_inv_lo);
  }
  fit.r_inv_pareto = fit_pareto(r_inv, r_inv_lo);
  fit.r_inv_exponential = fit_exponential_mle(r_inv_shifted);

  for (double lo = options.ttc_band_start; lo < kSpeedHi - 1e-9; lo += options.ttc_band_width) {
    const double hi = std::min(lo + options.ttc_band_width, kSpeedHi);
    std::vector<double> ttc_inv;
    for (const auto& r : records) {
      if (r.v_l >= lo && r.v_l < hi) ttc_inv.push_back(-r.r_l_dot / r.r_l);
    }
    if (ttc_inv.size() < std::max<std::size_t>(options.min_band_count, 2)) continue;
    fit.ttc_bands.push_back({lo, hi, ttc_inv.size(), fit_exponential_mle(ttc_inv)});
  }
  if (fit.ttc_bands.empty()) {
    throw std::runtime_error("fit_events: no speed band has enough rows for a TTC^-1 fit");
  }

  ModelConfig& m = fit.model;
  m = ModelConfig::defaults();
  m.v_edges.clear();
  m.v_mass.clear();
  const auto n_hist = static_cast<std::size_t>(
      std::ceil((kSpeedHi - kSpeedLo) / options.histogram_width - 1e-9));
  for (std::size_t i = 0; i <= n_hist; ++i) {
    m.v_edges.push_back(std::min(kSpeedLo + static_cast<double>(i) * options.histogram_width, kSpeedHi));
  }
  std::vector<double> counts(n_hist, 0.0);
  for (const auto& r : records) {
    auto i = static_cast<std::size_t>((r.v_l - kSpeedLo) / options.histogram_width);
    counts[std::min(i, n_hist - 1)] += 1.0;
  }
  for (double c : counts) m.v_mass.push_back(c / static_cast<double>(records.size()));

  m.r_k = fit.r_inv_pareto.params[0];
  m.r_sigma = fit.r_inv_pareto.params[1];
  m.r_theta = r_inv_lo;
  m.r_lo = r_inv_lo;
  m.r_hi = 1.0 / kRangeLo;
  m.lambda_r.reset();

  m.ttc_table.clear();
  for (const auto& b : fit.ttc_bands) {
    m.ttc_table.push_back({0.5 * (b.v_lo + b.v_hi), b.exponential.params[0]});
  }
  return fit;
}

}  // namespace acceval
