#include "acceval/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "acceval/errors.hpp"

namespace acceval {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double clamp_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Breakpoints for piecewise adaptive quadrature on [lo, hi]: both densities
// concentrate within a few `scale` of lo, so the first pieces are short.
std::vector<double> quadrature_breaks(double lo, double hi, double scale) {
  std::vector<double> pts{lo};
  for (double mult : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
    const double x = lo + mult * scale;
    if (x < hi) pts.push_back(x);
  }
  pts.push_back(hi);
  return pts;
}

// Each finite piece is mapped onto [0, 1]: this Boost version compares the
// unscaled Kronrod error against a width-scaled tolerance, so narrow pieces
// would otherwise subdivide to max depth without converging.
template <class F>
double integrate_pieces(F&& f, const std::vector<double>& pts) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i];
    const double b = pts[i + 1];
    if (std::isinf(b)) {
      total += Quad::integrate([&](double u) { return f(a + u); }, 0.0, kInfinity, 15, 1e-12);
    } else {
      const double w = b - a;
      total += w * Quad::integrate([&](double t) { return f(a + w * t); }, 0.0, 1.0, 15, 1e-12);
    }
  }
  return total;
}

}  // namespace

double bic_score(int free_params, std::size_t n, double loglik) noexcept {
  return static_cast<double>(free_params) * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

// ---------------------------------------------------------------------------
// TruncatedPareto

TruncatedPareto::TruncatedPareto(double k, double sigma, double theta, double lo, double hi)
    : k_(k), sigma_(sigma), theta_(theta), lo_(lo), hi_(hi) {
  require(std::isfinite(k) && k > 0.0, "TruncatedPareto: k must be > 0");
  require(std::isfinite(sigma) && sigma > 0.0, "TruncatedPareto: sigma must be > 0");
  require(std::isfinite(theta) && theta >= 0.0, "TruncatedPareto: theta must be >= 0");
  require(std::isfinite(lo) && theta <= lo, "TruncatedPareto: requires theta <= lo");
  require(lo < hi, "TruncatedPareto: requires lo < hi");
  s_lo_ = survival_untruncated(lo_);
  mass_ = s_lo_ - survival_untruncated(hi_);
  require(mass_ > 0.0, "TruncatedPareto: truncation interval carries no mass");
}

double TruncatedPareto::survival_untruncated(double x) const noexcept {
  if (x <= theta_) return 1.0;
  if (std::isinf(x)) return 0.0;
  return std::exp(-std::log1p(k_ * (x - theta_) / sigma_) / k_);
}

double TruncatedPareto::pdf_untruncated(double x) const noexcept {
  if (x < theta_ || std::isinf(x)) return 0.0;
  return std::exp(-(1.0 + 1.0 / k_) * std::log1p(k_ * (x - theta_) / sigma_)) / sigma_;
}

double TruncatedPareto::pdf(double x) const noexcept {
  if (x < lo_ || x > hi_) return 0.0;
  return pdf_untruncated(x) / mass_;
}

double TruncatedPareto::cdf(double x) const noexcept {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return (s_lo_ - survival_untruncated(x)) / mass_;
}

double TruncatedPareto::quantile(double u) const noexcept {
  const double s = s_lo_ - u * mass_;
  // survival s  <=>  x = theta + sigma/k * (s^-k - 1)
  const double x = theta_ + sigma_ / k_ * std::expm1(-k_ * std::log(s));
  return clamp_to(x, lo_, hi_);
}

double pareto_pdf(double x, const TruncatedPareto& p) noexcept { return p.pdf(x); }
double pareto_cdf(double x, const TruncatedPareto& p) noexcept { return p.cdf(x); }
double pareto_sample(const TruncatedPareto& p, double u) noexcept { return p.quantile(u); }

// ---------------------------------------------------------------------------
// TruncatedExponential

TruncatedExponential::TruncatedExponential(double mean, double lo, double hi)
    : mean_(mean), lo_(lo), hi_(hi) {
  require(std::isfinite(mean) && mean > 0.0, "TruncatedExponential: mean must be > 0");
  require(std::isfinite(lo), "TruncatedExponential: lo must be finite");
  require(lo < hi, "TruncatedExponential: requires lo < hi");
  mass_ = std::isinf(hi) ? 1.0 : -std::expm1(-(hi - lo) / mean);
  require(mass_ > 0.0, "TruncatedExponential: truncation interval carries no mass");
  log_mass_ = std::log(mass_);
}

double TruncatedExponential::pdf(double x) const noexcept {
  if (x < lo_ || x > hi_) return 0.0;
  return std::exp(-(x - lo_) / mean_) / (mean_ * mass_);
}

double TruncatedExponential::log_pdf(double x) const noexcept {
  if (x < lo_ || x > hi_) return -kInfinity;
  return -std::log(mean_) - log_mass_ - (x - lo_) / mean_;
}

double TruncatedExponential::cdf(double x) const noexcept {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return -std::expm1(-(x - lo_) / mean_) / mass_;
}

double TruncatedExponential::quantile(double u) const noexcept {
  return clamp_to(lo_ - mean_ * std::log1p(-u * mass_), lo_, hi_);
}

double TruncatedExponential::truncated_mean() const noexcept {
  if (std::isinf(hi_)) return lo_ + mean_;
  const double w = hi_ - lo_;
  return lo_ + mean_ - w * std::exp(-w / mean_) / mass_;
}

double exp_pdf(double x, const TruncatedExponential& e) noexcept { return e.pdf(x); }
double exp_cdf(double x, const TruncatedExponential& e) noexcept { return e.cdf(x); }
double exp_sample(const TruncatedExponential& e, double u) noexcept { return e.quantile(u); }

TruncatedExponential tilt_exponential(const TruncatedExponential& base, double vartheta) {
  if (!(vartheta < base.mean_parameter())) {
    throw std::invalid_argument("tilt_exponential: requires vartheta < mean (got vartheta=" +
                                std::to_string(vartheta) +
                                ", mean=" + std::to_string(base.mean_parameter()) + ")");
  }
  return TruncatedExponential(base.mean_parameter() - vartheta, base.lo(), base.hi());
}

TruncatedExponential tilt_exponential(double mean, double vartheta) {
  return tilt_exponential(TruncatedExponential(mean), vartheta);
}

double exponential_log_ratio(const TruncatedExponential& f, const TruncatedExponential& g,
                             double x) noexcept {
  if (x < f.lo() || x > f.hi()) return -kInfinity;
  if (x < g.lo() || x > g.hi()) return kInfinity;
  const double mf = f.mean_parameter();
  const double mg = g.mean_parameter();
  const double constant = (-std::log(mf) - std::log(f.mass()) + f.lo() / mf) -
                          (-std::log(mg) - std::log(g.mass()) + g.lo() / mg);
  return constant + x * (1.0 / mg - 1.0 / mf);
}

// ---------------------------------------------------------------------------
// Least-squares exponential approximation of the Pareto

double lsq_objective(const TruncatedPareto& p, double mean) {
  const TruncatedExponential e(mean, p.lo(), p.hi());
  const auto sq_diff = [&](double x) {
    const double d = e.pdf(x) - p.pdf(x);
    return d * d;
  };
  return integrate_pieces(sq_diff, quadrature_breaks(p.lo(), p.hi(), std::min(p.sigma(), mean)));
}

double lsq_exponential_of_pareto(const TruncatedPareto& p) {
  // Scan log-spaced means around the Pareto scale, then polish with Brent.
  constexpr int kGrid = 121;
  const double center = p.sigma();
  const double log_lo = std::log(center) - 3.0 * std::log(10.0);
  const double log_hi = std::log(center) + 3.0 * std::log(10.0);
  std::vector<double> grid(kGrid);
  std::vector<double> values(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = log_lo + (log_hi - log_lo) * i / (kGrid - 1);
    values[i] = lsq_objective(p, std::exp(grid[i]));
  }
  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  if (best == 0 || best == kGrid - 1) {
    throw NumericalError("lsq_exponential_of_pareto: minimum not bracketed in mean range [" +
                         std::to_string(std::exp(log_lo)) + ", " +
                         std::to_string(std::exp(log_hi)) + "] (k=" + std::to_string(p.k()) +
                         ", sigma=" + std::to_string(p.sigma()) + ")");
  }
  const auto objective = [&](double log_mean) { return lsq_objective(p, std::exp(log_mean)); };
  const auto [arg, val] =
      boost::math::tools::brent_find_minima(objective, grid[best - 1], grid[best + 1], 40);
  (void)val;
  return std::exp(arg);
}

// ---------------------------------------------------------------------------
// Fitters

FitReport fit_exponential_mle(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("fit_exponential_mle: need n >= 2");
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("fit_exponential_mle: samples must be positive and finite");
    }
  }
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  FitReport r;
  r.params = {mean};
  r.free_params = 1;
  r.n = samples.size();
  r.loglik = -n * std::log(mean) - n;
  r.bic = bic_score(r.free_params, r.n, r.loglik);
  return r;
}

FitReport fit_pareto(std::span<const double> samples, std::optional<double> theta) {
  if (samples.size() < 10) throw std::invalid_argument("fit_pareto: need n >= 10");
  const double min_x = *std::min_element(samples.begin(), samples.end());
  const double loc = theta.value_or(min_x);
  if (!std::isfinite(loc) || loc < 0.0) throw std::invalid_argument("fit_pareto: bad theta");
  std::vector<double> y;
  y.reserve(samples.size());
  for (double x : samples) {
    if (!std::isfinite(x) || x < loc) {
      throw std::invalid_argument("fit_pareto: samples must be finite and >= theta");
    }
    y.push_back(x - loc);
  }
  const double n = static_cast<double>(y.size());
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  if (!(y_mean > 0.0)) throw std::invalid_argument("fit_pareto: degenerate sample");

  // Profile likelihood in tau = k / sigma: for fixed tau the shape MLE is
  // k(tau) = mean(log1p(tau * y)), leaving a one-dimensional search.
  const auto shape_at = [&](double tau) {
    double s = 0.0;
    for (double v : y) s += std::log1p(tau * v);
    return s / n;
  };
  const auto neg_profile = [&](double log_tau) {
    const double tau = std::exp(log_tau);
    const double k = shape_at(tau);
    return n * std::log(k / tau) + n * (k + 1.0);
  };

  constexpr int kGrid = 161;
  const double base = -std::log(y_mean);
  const double log_lo = base - 4.0 * std::log(10.0);
  const double log_hi = base + 6.0 * std::log(10.0);
  std::vector<double> grid(kGrid);
  std::vector<double> values(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = log_lo + (log_hi - log_lo) * i / (kGrid - 1);
    values[i] = neg_profile(grid[i]);
  }
  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  if (best == 0 || best == kGrid - 1) {
    throw NumericalError(
        "fit_pareto: likelihood maximum not bracketed (data may be closer to exponential, k -> 0)");
  }
  const auto [log_tau, neg_ll] =
      boost::math::tools::brent_find_minima(neg_profile, grid[best - 1], grid[best + 1], 50);
  const double tau = std::exp(log_tau);
  const double k = shape_at(tau);
  const double sigma = k / tau;
  if (!(k > 0.0) || !std::isfinite(sigma)) throw NumericalError("fit_pareto: non-convergence");

  FitReport r;
  r.params = {k, sigma, loc};
  r.free_params = theta ? 2 : 3;
  r.n = y.size();
  r.loglik = -neg_ll;
  r.bic = bic_score(r.free_params, r.n, r.loglik);
  return r;
}

// ---------------------------------------------------------------------------
// EmpiricalDist

EmpiricalDist::EmpiricalDist(std::vector<double> bin_edges, std::vector<double> bin_mass)
    : edges_(std::move(bin_edges)), mass_(std::move(bin_mass)) {
  require(!mass_.empty() && edges_.size() == mass_.size() + 1,
          "EmpiricalDist: need one more edge than masses");
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    require(std::isfinite(edges_[i]) && edges_[i] < edges_[i + 1],
            "EmpiricalDist: edges must be strictly increasing");
  }
  double total = 0.0;
  for (double m : mass_) {
    require(std::isfinite(m) && m >= 0.0, "EmpiricalDist: masses must be nonnegative");
    total += m;
  }
  require(std::abs(total - 1.0) <= 1e-9, "EmpiricalDist: masses must sum to 1");
}

std::vector<double> EmpiricalDist::restricted_mass(double lo, double hi) const {
  std::vector<double> out(mass_.size(), 0.0);
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    const double a = std::max(edges_[i], lo);
    const double b = std::min(edges_[i + 1], hi);
    if (b > a) out[i] = mass_[i] * (b - a) / (edges_[i + 1] - edges_[i]);
  }
  return out;
}

double empirical_sample(const EmpiricalDist& d, double lo, double hi, double u1, double u2) {
  const auto w = d.restricted_mass(lo, hi);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) {
    throw std::domain_error("empirical_sample: no probability mass in (" + std::to_string(lo) +
                            ", " + std::to_string(hi) + ")");
  }
  const double target = u1 * total;
  std::size_t bin = 0;
  double cum = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    last_nonzero = i;
    cum += w[i];
    bin = i;
    if (target < cum) break;
  }
  if (target >= cum) bin = last_nonzero;
  const double a = std::max(d.edges()[bin], lo);
  const double b = std::min(d.edges()[bin + 1], hi);
  return a + u2 * (b - a);
}

}  // namespace acceval
