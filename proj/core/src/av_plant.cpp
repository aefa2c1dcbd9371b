#include "acceval/av_plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "acceval/errors.hpp"

namespace acceval {

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw std::invalid_argument(std::string("AvConfig.") + field + ": " + rule);
}

bool finite_state(const SimState& s) {
  return std::isfinite(s.r) && std::isfinite(s.v) && std::isfinite(s.a) &&
         std::isfinite(s.a_cmd) && std::isfinite(s.prev_err) && std::isfinite(s.a_d_prev);
}

}  // namespace

void AvConfig::validate() const {
  require(ts > 0.0, "ts", "must be > 0");
  require(tau_av > 0.0, "tau_av", "must be > 0");
  require(t_lc_max > 0.0, "t_lc_max", "must be > 0");
  require(a_aeb > 0.0, "a_aeb", "must be > 0");
  require(r_aeb < 0.0, "r_aeb", "must be < 0");
  require(r_conflict > 0.0, "r_conflict", "must be > 0");
  require(a_acc_max > 0.0, "a_acc_max", "must be > 0");
  require(t_hw_desired > 0.0, "t_hw_desired", "must be > 0");
  require(t_hw_cap > 0.0, "t_hw_cap", "must be > 0");
  require(error_sign == 1 || error_sign == -1, "error_sign", "must be +1 or -1");
  require(std::isfinite(kp_acc) && std::isfinite(ki_acc), "kp_acc/ki_acc", "must be finite");
  require(!ttc_aeb_schedule.empty(), "ttc_aeb_schedule", "must not be empty");
  for (std::size_t i = 0; i < ttc_aeb_schedule.size(); ++i) {
    require(ttc_aeb_schedule[i].ttc >= 0.0, "ttc_aeb_schedule", "ttc values must be >= 0");
    if (i > 0) {
      require(ttc_aeb_schedule[i].v > ttc_aeb_schedule[i - 1].v, "ttc_aeb_schedule",
              "speeds must increase");
    }
  }
}

double headway_error(double t_hw, const AvConfig& cfg) noexcept {
  return cfg.error_sign * (t_hw - cfg.t_hw_desired);
}

double acc_command(double t_hw, double prev_err, double a_d_prev, const AvConfig& cfg) {
  const double err = headway_error(t_hw, cfg);
  const double a_d = a_d_prev + cfg.kp_acc * (err - prev_err) +
                     cfg.ki_acc * (err + prev_err) * cfg.ts / 2.0;
  return std::clamp(a_d, -cfg.a_acc_max, cfg.a_acc_max);
}

double aeb_threshold(double v, const AvConfig& cfg) noexcept {
  const auto& s = cfg.ttc_aeb_schedule;
  if (v <= s.front().v) return s.front().ttc;
  if (v >= s.back().v) return s.back().ttc;
  std::size_t i = 0;
  while (v > s[i + 1].v) ++i;
  const double w = (v - s[i].v) / (s[i + 1].v - s[i].v);
  return s[i].ttc + w * (s[i + 1].ttc - s[i].ttc);
}

double time_to_collision(double r, double v, double v_l) noexcept {
  return v > v_l ? r / (v - v_l) : kInfinity;
}

double time_headway(double r, double v, const AvConfig& cfg) noexcept {
  if (!(v > 0.0)) return cfg.t_hw_cap;
  return std::min(r / v, cfg.t_hw_cap);
}

SimState initial_state(const ScenarioSample& scenario, const AvConfig& cfg) {
  SimState s;
  s.r = scenario.r0;
  s.v = scenario.v0;
  s.prev_err = headway_error(time_headway(s.r, s.v, cfg), cfg);
  if (time_to_collision(s.r, s.v, scenario.v_l) < aeb_threshold(s.v, cfg)) s.mode = DriveMode::Aeb;
  return s;
}

SimState step(const SimState& state, const ScenarioSample& scenario, const AvConfig& cfg) {
  SimState next = state;
  if (next.mode == DriveMode::Acc &&
      time_to_collision(state.r, state.v, scenario.v_l) < aeb_threshold(state.v, cfg)) {
    next.mode = DriveMode::Aeb;
  }

  if (next.mode == DriveMode::Acc) {
    const double t_hw = time_headway(state.r, state.v, cfg);
    const double a_d = acc_command(t_hw, state.prev_err, state.a_d_prev, cfg);
    next.a_cmd = a_d;
    next.a_d_prev = a_d;
    next.prev_err = headway_error(t_hw, cfg);
  } else {
    next.a_cmd = std::max(-cfg.a_aeb, state.a_cmd + cfg.r_aeb * cfg.ts);
  }

  next.a = state.a + (cfg.ts / cfg.tau_av) * (next.a_cmd - state.a);
  next.v = std::max(0.0, state.v + next.a * cfg.ts);
  next.r = state.r + (scenario.v_l - state.v) * cfg.ts;
  next.t = state.t + cfg.ts;
  return next;
}

SimTrace simulate(const ScenarioSample& scenario, const AvConfig& cfg, bool record_states) {
  SimTrace trace;
  SimState state = initial_state(scenario, cfg);
  const auto steps = static_cast<long>(std::llround(cfg.t_lc_max / cfg.ts));

  if (record_states) {
    trace.states.reserve(static_cast<std::size_t>(steps) + 1);
    trace.states.push_back(state);
  }
  trace.min_range = state.r;
  trace.min_ttc = time_to_collision(state.r, state.v, scenario.v_l);
  bool conflict_reached = state.r < cfg.r_conflict;
  bool crashed = state.r <= 0.0;

  long k = 0;
  for (; k < steps && !crashed; ++k) {
    trace.distance += state.v * cfg.ts;
    SimState next = step(state, scenario, cfg);
    next.t = static_cast<double>(k + 1) * cfg.ts;
    if (!finite_state(next)) {
      std::ostringstream msg;
      msg << "simulate: non-finite state at t=" << next.t << " (r=" << next.r << ", v=" << next.v
          << ", a=" << next.a << ", a_cmd=" << next.a_cmd << "); check plant configuration";
      throw SimulationError(msg.str());
    }
    trace.min_range = std::min(trace.min_range, next.r);
    trace.min_ttc = std::min(trace.min_ttc, time_to_collision(next.r, state.v, scenario.v_l));
    if (!conflict_reached && next.r < cfg.r_conflict) {
      conflict_reached = true;
      trace.distance_to_conflict = trace.distance;
    }
    if (next.r <= 0.0) {
      crashed = true;
      trace.delta_v = state.v - scenario.v_l;
    }
    if (record_states) trace.states.push_back(next);
    state = next;
  }
  if (!conflict_reached) trace.distance_to_conflict = trace.distance;

  trace.t_end = static_cast<double>(k) * cfg.ts;
  if (crashed) {
    trace.outcome = Outcome::Crash;
  } else if (trace.min_range < cfg.r_conflict) {
    trace.outcome = Outcome::Conflict;
  }
  return trace;
}

EventRecord classify_events(const SimTrace& trace, const AvConfig& cfg) noexcept {
  EventRecord e;
  e.conflict = trace.min_range < cfg.r_conflict;
  e.crash = trace.outcome == Outcome::Crash;
  e.delta_v = e.crash ? trace.delta_v : 0.0;
  return e;
}

}  // namespace acceval
