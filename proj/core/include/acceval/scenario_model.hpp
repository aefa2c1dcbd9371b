#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acceval/distributions.hpp"
#include "acceval/random_stream.hpp"

namespace acceval {

/// One node of the speed-indexed TTC^-1 mean table.
struct LambdaNode {
  double v_center = 0.0;  // m/s
  double lambda = 0.0;    // mean of TTC^-1, 1/s
};

struct VelocityBin {
  std::string name;
  double lo = 0.0;  // m/s
  double hi = 0.0;  // m/s
};

/// Velocity bins used when none are configured.
std::vector<VelocityBin> default_velocity_bins();

/// Generative cut-in model: v_L from an empirical law, R_L^-1 from a truncated
/// Pareto, TTC_L^-1 from an exponential whose mean depends on v_L.
class ScenarioModel {
 public:
  /// Validates all tables. When `lambda_r` is supplied it must match the
  /// least-squares exponential approximation of `r_inv` within 1e-9;
  /// otherwise it is computed.
  ScenarioModel(EmpiricalDist v_dist, TruncatedPareto r_inv, std::vector<LambdaNode> ttc_table,
                std::vector<VelocityBin> bins, double lambda_floor = 0.01,
                std::optional<double> lambda_r = std::nullopt, double ttc_inv_lo = 0.0,
                double ttc_inv_hi = kInfinity);

  const EmpiricalDist& v_dist() const noexcept { return v_dist_; }
  const TruncatedPareto& r_inv() const noexcept { return r_inv_; }
  const std::vector<LambdaNode>& ttc_table() const noexcept { return ttc_table_; }
  const std::vector<VelocityBin>& bins() const noexcept { return bins_; }
  double lambda_floor() const noexcept { return lambda_floor_; }
  double ttc_inv_lo() const noexcept { return ttc_inv_lo_; }
  double ttc_inv_hi() const noexcept { return ttc_inv_hi_; }

  /// Mean of the least-squares exponential approximation of the R^-1 law.
  double lambda_r() const noexcept { return lambda_r_; }

  const VelocityBin& bin(const std::string& name) const;
  std::size_t bin_index(const std::string& name) const;

  /// Linear interpolation/extrapolation of the TTC^-1 mean, floored.
  double lambda_ttc(double v) const noexcept;
  /// Smallest lambda_ttc over [lo, hi]; exact for a piecewise-linear table.
  double min_lambda_ttc(double lo, double hi) const noexcept;

  /// Original TTC^-1 law at speed v.
  TruncatedExponential ttc_law(double v) const;
  /// Identity element of the R^-1 proposal family.
  TruncatedExponential r_inv_exp_approx() const;

 private:
  EmpiricalDist v_dist_;
  TruncatedPareto r_inv_;
  std::vector<LambdaNode> ttc_table_;
  std::vector<VelocityBin> bins_;
  double lambda_floor_;
  double lambda_r_;
  double ttc_inv_lo_;
  double ttc_inv_hi_;
};

/// ECM tilts for one velocity bin. (0, 0) is the exponential approximation
/// itself, not the original model.
struct ProposalParams {
  double vartheta_r = 0.0;    // m^-1
  double vartheta_ttc = 0.0;  // s^-1
  std::string bin;
};

/// Throws std::invalid_argument when a tilt leaves the valid region
/// (vartheta_r < lambda_R, vartheta_ttc < lambda_TTC(v) for all v in the bin).
void validate_proposal(const ScenarioModel& model, const ProposalParams& proposal);

struct Kinematics {
  double rdot = 0.0;  // m/s, <= 0
  double v0 = 0.0;    // m/s
  double r0 = 0.0;    // m
};

Kinematics derive_kinematics(double v_l, double r_inv, double ttc_inv);

struct ScenarioSample {
  double v_l = 0.0;
  double r_inv = 0.0;
  double ttc_inv = 0.0;
  double r0 = 0.0;
  double rdot = 0.0;
  double v0 = 0.0;
  double likelihood = 1.0;
};

/// Builds a sample from explicit values (likelihood 1).
ScenarioSample make_scenario(double v_l, double r_inv, double ttc_inv);

double lambda_ttc(double v, const ScenarioModel& model) noexcept;

/// Original-over-proposal density ratio for the R^-1 and TTC^-1 factors.
double likelihood_ratio(const ScenarioSample& s, const ScenarioModel& model,
                        const ProposalParams& proposal);

/// Draws one cut-in. Without a proposal the original laws are used and the
/// likelihood is exactly 1. Consumes exactly four uniforms from `rng`.
ScenarioSample sample_scenario(const ScenarioModel& model, const ProposalParams* proposal,
                               const VelocityBin& range, RandomStream& rng);

}  // namespace acceval
