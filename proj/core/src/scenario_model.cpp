#include "acceval/scenario_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acceval {

std::vector<VelocityBin> default_velocity_bins() {
  return {{"low", 5.0, 15.0}, {"medium", 15.0, 25.0}, {"high", 25.0, 40.0}};
}

ScenarioModel::ScenarioModel(EmpiricalDist v_dist, TruncatedPareto r_inv,
                             std::vector<LambdaNode> ttc_table, std::vector<VelocityBin> bins,
                             double lambda_floor, std::optional<double> lambda_r,
                             double ttc_inv_lo, double ttc_inv_hi)
    : v_dist_(std::move(v_dist)),
      r_inv_(r_inv),
      ttc_table_(std::move(ttc_table)),
      bins_(std::move(bins)),
      lambda_floor_(lambda_floor),
      lambda_r_(0.0),
      ttc_inv_lo_(ttc_inv_lo),
      ttc_inv_hi_(ttc_inv_hi) {
  if (ttc_table_.empty()) throw std::invalid_argument("ScenarioModel: empty TTC^-1 mean table");
  for (std::size_t i = 0; i < ttc_table_.size(); ++i) {
    if (!(ttc_table_[i].lambda > 0.0)) {
      throw std::invalid_argument("ScenarioModel: TTC^-1 means must be > 0");
    }
    if (i > 0 && !(ttc_table_[i].v_center > ttc_table_[i - 1].v_center)) {
      throw std::invalid_argument("ScenarioModel: TTC^-1 table speeds must increase strictly");
    }
  }
  if (!(lambda_floor_ > 0.0)) throw std::invalid_argument("ScenarioModel: lambda floor must be > 0");
  if (!(ttc_inv_lo_ >= 0.0 && ttc_inv_lo_ < ttc_inv_hi_)) {
    throw std::invalid_argument("ScenarioModel: bad TTC^-1 support");
  }
  if (bins_.empty()) throw std::invalid_argument("ScenarioModel: no velocity bins");
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (!(bins_[i].lo < bins_[i].hi)) {
      throw std::invalid_argument("ScenarioModel: bin '" + bins_[i].name + "' is empty");
    }
    if (i > 0 && bins_[i].lo != bins_[i - 1].hi) {
      throw std::invalid_argument("ScenarioModel: bins must tile the speed range without gaps "
                                  "or overlap (at '" + bins_[i].name + "')");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (bins_[j].name == bins_[i].name) {
        throw std::invalid_argument("ScenarioModel: duplicate bin name '" + bins_[i].name + "'");
      }
    }
  }

  const double computed = lsq_exponential_of_pareto(r_inv_);
  if (lambda_r && std::abs(*lambda_r - computed) > 1e-9) {
    throw std::invalid_argument("ScenarioModel: supplied lambda_r " + std::to_string(*lambda_r) +
                                " disagrees with least-squares value " + std::to_string(computed));
  }
  lambda_r_ = computed;
}

const VelocityBin& ScenarioModel::bin(const std::string& name) const {
  return bins_[bin_index(name)];
}

std::size_t ScenarioModel::bin_index(const std::string& name) const {
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i].name == name) return i;
  }
  throw std::invalid_argument("unknown velocity bin '" + name + "'");
}

double ScenarioModel::lambda_ttc(double v) const noexcept {
  const auto& t = ttc_table_;
  double value;
  if (t.size() == 1) {
    value = t.front().lambda;
  } else {
    // Segment used for interpolation; the end segments also extrapolate.
    std::size_t i = 0;
    while (i + 2 < t.size() && v > t[i + 1].v_center) ++i;
    const auto& a = t[i];
    const auto& b = t[i + 1];
    const double w = (v - a.v_center) / (b.v_center - a.v_center);
    value = a.lambda + w * (b.lambda - a.lambda);
  }
  return std::max(value, lambda_floor_);
}

double ScenarioModel::min_lambda_ttc(double lo, double hi) const noexcept {
  double m = std::min(lambda_ttc(lo), lambda_ttc(hi));
  for (const auto& node : ttc_table_) {
    if (node.v_center > lo && node.v_center < hi) m = std::min(m, lambda_ttc(node.v_center));
  }
  return m;
}

TruncatedExponential ScenarioModel::ttc_law(double v) const {
  return TruncatedExponential(lambda_ttc(v), ttc_inv_lo_, ttc_inv_hi_);
}

TruncatedExponential ScenarioModel::r_inv_exp_approx() const {
  return TruncatedExponential(lambda_r_, r_inv_.lo(), r_inv_.hi());
}

double lambda_ttc(double v, const ScenarioModel& model) noexcept { return model.lambda_ttc(v); }

void validate_proposal(const ScenarioModel& model, const ProposalParams& proposal) {
  const auto& b = model.bin(proposal.bin);
  if (!(proposal.vartheta_r < model.lambda_r())) {
    throw std::invalid_argument("proposal for bin '" + b.name + "': vartheta_r " +
                                std::to_string(proposal.vartheta_r) + " must be < lambda_R " +
                                std::to_string(model.lambda_r()));
  }
  const double lam = model.min_lambda_ttc(b.lo, b.hi);
  if (!(proposal.vartheta_ttc < lam)) {
    throw std::invalid_argument("proposal for bin '" + b.name + "': vartheta_ttc " +
                                std::to_string(proposal.vartheta_ttc) +
                                " must be < min lambda_TTC over the bin " + std::to_string(lam));
  }
}

Kinematics derive_kinematics(double v_l, double r_inv, double ttc_inv) {
  if (!(r_inv > 0.0)) throw std::invalid_argument("derive_kinematics: r_inv must be > 0");
  if (!(ttc_inv >= 0.0)) throw std::invalid_argument("derive_kinematics: ttc_inv must be >= 0");
  Kinematics k;
  k.rdot = -ttc_inv / r_inv;
  k.v0 = v_l - k.rdot;
  k.r0 = 1.0 / r_inv;
  return k;
}

ScenarioSample make_scenario(double v_l, double r_inv, double ttc_inv) {
  const auto k = derive_kinematics(v_l, r_inv, ttc_inv);
  ScenarioSample s;
  s.v_l = v_l;
  s.r_inv = r_inv;
  s.ttc_inv = ttc_inv;
  s.r0 = k.r0;
  s.rdot = k.rdot;
  s.v0 = k.v0;
  s.likelihood = 1.0;
  return s;
}

double likelihood_ratio(const ScenarioSample& s, const ScenarioModel& model,
                        const ProposalParams& proposal) {
  const auto r_prop = tilt_exponential(model.r_inv_exp_approx(), proposal.vartheta_r);
  const auto ttc_orig = model.ttc_law(s.v_l);
  const auto ttc_prop = tilt_exponential(ttc_orig, proposal.vartheta_ttc);

  const double log_r = std::log(model.r_inv().pdf(s.r_inv)) - r_prop.log_pdf(s.r_inv);
  const double log_ttc = exponential_log_ratio(ttc_orig, ttc_prop, s.ttc_inv);
  const double ratio = std::exp(log_r + log_ttc);
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::logic_error("likelihood_ratio: proposal density vanished at a sampled point");
  }
  return ratio;
}

ScenarioSample sample_scenario(const ScenarioModel& model, const ProposalParams* proposal,
                               const VelocityBin& range, RandomStream& rng) {
  const double u_bin = rng.uniform();
  const double u_pos = rng.uniform();
  const double u_r = rng.uniform();
  const double u_ttc = rng.uniform();

  const double v_l = empirical_sample(model.v_dist(), range.lo, range.hi, u_bin, u_pos);
  const auto ttc_orig = model.ttc_law(v_l);

  if (proposal == nullptr) {
    const double r_inv = model.r_inv().quantile(u_r);
    const double ttc_inv = ttc_orig.quantile(u_ttc);
    return make_scenario(v_l, r_inv, ttc_inv);
  }

  const auto r_prop = tilt_exponential(model.r_inv_exp_approx(), proposal->vartheta_r);
  const auto ttc_prop = tilt_exponential(ttc_orig, proposal->vartheta_ttc);
  auto s = make_scenario(v_l, r_prop.quantile(u_r), ttc_prop.quantile(u_ttc));
  s.likelihood = likelihood_ratio(s, model, *proposal);
  return s;
}

}  // namespace acceval
