#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace acceval {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Generalized Pareto law with shape k > 0, scale sigma, location theta,
/// renormalized to [lo, hi]. `hi` may be infinite.
class TruncatedPareto {
 public:
  TruncatedPareto(double k, double sigma, double theta, double lo, double hi = kInfinity);

  double k() const noexcept { return k_; }
  double sigma() const noexcept { return sigma_; }
  double theta() const noexcept { return theta_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// Probability mass of the untruncated law inside [lo, hi].
  double mass() const noexcept { return mass_; }

  /// Untruncated survival function, 1 for x <= theta.
  double survival_untruncated(double x) const noexcept;
  /// Untruncated density, 0 for x < theta.
  double pdf_untruncated(double x) const noexcept;

  double pdf(double x) const noexcept;
  double cdf(double x) const noexcept;
  double quantile(double u) const noexcept;

  bool operator==(const TruncatedPareto&) const = default;

 private:
  double k_, sigma_, theta_, lo_, hi_;
  double s_lo_, mass_;
};

/// Exponential law parameterized by its MEAN (not the rate), with density
/// proportional to exp(-x / mean) on [lo, hi]. `hi` may be infinite.
class TruncatedExponential {
 public:
  explicit TruncatedExponential(double mean, double lo = 0.0, double hi = kInfinity);

  double mean_parameter() const noexcept { return mean_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// Mass of the shifted law Exp(mean) started at lo that lands below hi.
  double mass() const noexcept { return mass_; }

  double pdf(double x) const noexcept;
  /// -inf outside the support.
  double log_pdf(double x) const noexcept;
  double cdf(double x) const noexcept;
  double quantile(double u) const noexcept;
  /// Mean of the truncated law (differs from mean_parameter() when lo > 0 or hi < inf).
  double truncated_mean() const noexcept;

  bool operator==(const TruncatedExponential&) const = default;

 private:
  double mean_, lo_, hi_;
  double mass_, log_mass_;
};

/// Piecewise-uniform law over ordered bins.
class EmpiricalDist {
 public:
  EmpiricalDist(std::vector<double> bin_edges, std::vector<double> bin_mass);

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& mass() const noexcept { return mass_; }
  std::size_t bin_count() const noexcept { return mass_.size(); }

  /// Mass of each bin after restriction to (lo, hi), assuming uniform density
  /// within each bin; not renormalized.
  std::vector<double> restricted_mass(double lo, double hi) const;

 private:
  std::vector<double> edges_;
  std::vector<double> mass_;
};

struct FitReport {
  /// Exponential: {mean}. Pareto: {k, sigma, theta}.
  std::vector<double> params;
  int free_params = 0;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t n = 0;
};

double bic_score(int free_params, std::size_t n, double loglik) noexcept;

double pareto_pdf(double x, const TruncatedPareto& p) noexcept;
double pareto_cdf(double x, const TruncatedPareto& p) noexcept;
/// Inverse-transform draw; u in (0, 1).
double pareto_sample(const TruncatedPareto& p, double u) noexcept;

double exp_pdf(double x, const TruncatedExponential& e) noexcept;
double exp_cdf(double x, const TruncatedExponential& e) noexcept;
double exp_sample(const TruncatedExponential& e, double u) noexcept;

/// Exponential change of measure in the mean-scaled parameterization: the
/// tilted law has mean (mean - vartheta) and keeps the base truncation.
/// Throws std::invalid_argument unless vartheta < mean.
TruncatedExponential tilt_exponential(const TruncatedExponential& base, double vartheta);
TruncatedExponential tilt_exponential(double mean, double vartheta);

/// log(f(x) / g(x)) for two truncated exponentials, collected so that terms
/// linear in x cancel exactly when the means agree.
double exponential_log_ratio(const TruncatedExponential& f, const TruncatedExponential& g,
                             double x) noexcept;

/// Integrated squared difference between the [lo, hi]-truncated exponential
/// with the given mean and the Pareto density.
double lsq_objective(const TruncatedPareto& p, double mean);

/// Mean of the exponential (same truncation as p) closest to p in integrated
/// squared error. Throws NumericalError if the minimum cannot be bracketed.
double lsq_exponential_of_pareto(const TruncatedPareto& p);

/// Untruncated exponential MLE: mean = sample mean.
FitReport fit_exponential_mle(std::span<const double> samples);

/// Untruncated Pareto MLE over (k, sigma) with theta fixed. Without `theta`
/// the location is min(samples) and counted as a fitted parameter.
FitReport fit_pareto(std::span<const double> samples, std::optional<double> theta = std::nullopt);

/// Draw from `d` restricted to (lo, hi): u1 picks the bin, u2 the position.
/// Throws std::domain_error if the range carries no mass.
double empirical_sample(const EmpiricalDist& d, double lo, double hi, double u1, double u2);

}  // namespace acceval
