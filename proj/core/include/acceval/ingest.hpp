#pragma once

#include <cstddef>
#include <istream>
#include <vector>

#include "acceval/config.hpp"
#include "acceval/distributions.hpp"

namespace acceval {

/// One recorded cut-in at the lane-crossing instant.
struct LaneChangeRecord {
  double v = 0.0;        // following (instrumented) vehicle speed, m/s
  double v_l = 0.0;      // lane-change vehicle speed, m/s
  double r_l = 0.0;      // range, m
  double r_l_dot = 0.0;  // range rate, m/s
};

/// Row counts by fate. A row is charged to the first filter it fails.
struct IngestCounts {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t malformed = 0;
  std::size_t speed_out_of_range = 0;   // v or v_L outside (2, 40) m/s
  std::size_t range_out_of_range = 0;   // R_L outside (0.1, 75) m
  std::size_t nonnegative_rate = 0;     // R_L dot >= 0 (opening gap)
};

/// Consistency filters on the recorded data set.
bool passes_filters(const LaneChangeRecord& r, IngestCounts& counts);

/// Reads a CSV with a header naming the columns v, v_l, r_l, r_l_dot (any
/// order, extra columns ignored) and returns the rows that pass the filters.
/// Throws std::runtime_error when a required column is missing.
std::vector<LaneChangeRecord> read_lane_changes(std::istream& in, IngestCounts& counts);

struct SpeedBinFit {
  double v_lo = 0.0;
  double v_hi = 0.0;
  std::size_t n = 0;
  FitReport exponential;  // TTC^-1 mean in this speed band
};

struct FitOptions {
  double ttc_band_width = 5.0;      // m/s, bands start at ttc_band_start
  double ttc_band_start = 5.0;
  std::size_t min_band_count = 30;  // sparser bands are left out of the table
  double histogram_width = 2.0;     // m/s
};

struct EventFit {
  IngestCounts counts;
  FitReport r_inv_pareto;       // location fixed at the 1/75 m^-1 filter bound
  FitReport r_inv_exponential;  // on R^-1 - 1/75, for the BIC comparison
  std::vector<SpeedBinFit> ttc_bands;
  ModelConfig model;
};

/// Filters the records and fits the scenario model: Pareto for R^-1, one
/// exponential per speed band for TTC^-1, histogram for v_L.
EventFit fit_events(std::istream& in, const FitOptions& options = {});

}  // namespace acceval
