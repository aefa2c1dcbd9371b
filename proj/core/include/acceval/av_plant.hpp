#pragma once

#include <cstdint>
#include <vector>

#include "acceval/scenario_model.hpp"

namespace acceval {

/// (speed, TTC) node of the AEB trigger schedule.
struct TtcNode {
  double v = 0.0;    // m/s
  double ttc = 0.0;  // s
};

/// Automated-vehicle parameters. Defaults are the published lane-change
/// simulation values; the AEB schedule is a placeholder.
struct AvConfig {
  double t_hw_desired = 2.0;  // s
  double a_acc_max = 5.0;     // m/s^2
  double kp_acc = -38.6;
  double ki_acc = -1.35;
  double a_aeb = 10.0;     // m/s^2, deceleration magnitude
  double r_aeb = -16.0;    // m/s^3
  double tau_av = 0.0796;  // s
  double ts = 0.1;         // s
  double t_lc_max = 8.0;   // s
  std::vector<TtcNode> ttc_aeb_schedule{{5.0, 1.0}, {15.0, 1.3}, {25.0, 1.5}, {40.0, 1.5}};
  double r_conflict = 9.144;  // m, 30 ft
  int error_sign = -1;        // err = error_sign * (t_hw - t_hw_desired)
  /// Headway reported when the AV is stopped; keeps the PI input finite.
  double t_hw_cap = 10.0;  // s

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class DriveMode : std::uint8_t { Acc, Aeb };

struct SimState {
  double t = 0.0;
  double r = 0.0;       // range to LCV rear, m
  double v = 0.0;       // AV speed, m/s
  double a = 0.0;       // actual acceleration, m/s^2
  double a_cmd = 0.0;   // commanded acceleration, m/s^2
  DriveMode mode = DriveMode::Acc;
  double prev_err = 0.0;  // headway error at the previous step, s
  double a_d_prev = 0.0;  // last ACC output, m/s^2
};

enum class Outcome : std::uint8_t { None, Conflict, Crash };

struct SimTrace {
  std::vector<SimState> states;  // empty unless recording was requested
  Outcome outcome = Outcome::None;
  double t_end = 0.0;
  double min_range = 0.0;
  /// Smallest r / (v - v_L) over the run (+inf if never closing); <= 0 on a crash.
  double min_ttc = kInfinity;
  double delta_v = 0.0;  // closing speed at impact; 0 without a crash
  /// AV distance until crash or horizon.
  double distance = 0.0;
  /// AV distance until the range first drops below r_conflict, or horizon.
  double distance_to_conflict = 0.0;
};

struct EventRecord {
  bool conflict = false;
  bool crash = false;
  double delta_v = 0.0;
};

/// Discrete PI on time-headway error with output saturation.
double acc_command(double t_hw, double prev_err, double a_d_prev, const AvConfig& cfg);
/// Headway error fed to the PI controller for a given headway.
double headway_error(double t_hw, const AvConfig& cfg) noexcept;

/// Piecewise-linear TTC trigger, clamped to the end values.
double aeb_threshold(double v, const AvConfig& cfg) noexcept;

/// r / (v - v_L) when closing, +inf otherwise.
double time_to_collision(double r, double v, double v_l) noexcept;

/// Headway r / v, capped at cfg.t_hw_cap.
double time_headway(double r, double v, const AvConfig& cfg) noexcept;

SimState step(const SimState& state, const ScenarioSample& scenario, const AvConfig& cfg);

SimState initial_state(const ScenarioSample& scenario, const AvConfig& cfg);

/// Runs one cut-in until crash or horizon. Throws SimulationError on a
/// non-finite state.
SimTrace simulate(const ScenarioSample& scenario, const AvConfig& cfg, bool record_states = false);

EventRecord classify_events(const SimTrace& trace, const AvConfig& cfg) noexcept;

}  // namespace acceval
