#ifndef EMOSPOOL_SCORING_HPP
#define EMOSPOOL_SCORING_HPP

// Proper scoring rules.  crps_closed carries the exact formulas for the four
// predictive families; crps_numeric evaluates any CDF by trapezoidal
// integration of the split form
//   CRPS(F, x) = int_lo^x F^2 dy + int_x^up (1 - F)^2 dy
// so the two routes can be checked against each other.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "emospool/distributions.hpp"
#include "emospool/errors.hpp"

namespace emospool {

enum class ScoreKind { crps, logs };

struct ScoreValue {
  double value;
  ScoreKind kind;
};

struct IntegrationGrid {
  double lower = 0.0;
  double upper = 1.0;
  int n_points = 20001;
};

// Default grid: support truncated at the 1 - 1e-7 quantile, rounded up to an
// integer (never below 1) so equal parameter sets share identical grids.
inline IntegrationGrid default_grid(const DistributionSpec& d,
                                    int n_points = 20001) {
  const double q = quantile(d, 1.0 - 1e-7);
  return {0.0, std::max(1.0, std::ceil(q)), n_points};
}

inline IntegrationGrid default_grid(const DistributionSpec& a,
                                    const DistributionSpec& b,
                                    int n_points = 20001) {
  const IntegrationGrid ga = default_grid(a, n_points);
  const IntegrationGrid gb = default_grid(b, n_points);
  return {0.0, std::max(ga.upper, gb.upper), n_points};
}

namespace detail {

// CRPS of a normal law truncated at zero (Thorarinsdottir-Gneiting form).
inline double crps_truncnormal(double mu, double sigma, double y) {
  const double c = mu / sigma;
  const double z = (y - mu) / sigma;
  const double p = std_normal_cdf(c);
  require(p > 0.0, "truncated normal CRPS: no mass on [0, inf)");
  const double val =
      z * p * (2.0 * std_normal_cdf(z) + p - 2.0) +
      2.0 * std_normal_pdf(z) * p -
      std_normal_cdf(1.4142135623730950488 * c) * 0.56418958354775628695;
  return sigma * val / (p * p);
}

// CRPS of a log-normal law (Baran-Lerch form).
inline double crps_lognormal(double mu, double sigma, double y) {
  const double w = (y > 0.0) ? (std::log(y) - mu) / sigma
                             : -std::numeric_limits<double>::infinity();
  const double pw = (y > 0.0) ? std_normal_cdf(w) : 0.0;
  const double pws = (y > 0.0) ? std_normal_cdf(w - sigma) : 0.0;
  return y * (2.0 * pw - 1.0) -
         2.0 * std::exp(mu + 0.5 * sigma * sigma) *
             (pws + std_normal_cdf(sigma * 0.70710678118654752440) - 1.0);
}

// CRPS of the censored shifted gamma law.  Derived from
//   CRPS = crps_gamma(y + shift) - int_0^shift G^2,
// with the latter integral reduced to incomplete gamma terms via the
// duplication identity; equals the Scheuerer-Hamill closed form.
inline double crps_csgamma(double shape, double scale, double shift,
                           double y) {
  const double k = shape;
  const double ct = (y + shift) / scale;
  const double dt = shift / scale;
  const double Pk_c = gamma_cdf(k, ct);
  const double Pk1_c = gamma_cdf(k + 1.0, ct);
  const double Pk_d = gamma_cdf(k, dt);
  const double Pk1_d = gamma_cdf(k + 1.0, dt);
  const double P2k_2d = gamma_cdf(2.0 * k, 2.0 * dt);
  const double inv_b = 1.0 / boost::math::beta(0.5, k);
  return scale *
         (ct * (2.0 * Pk_c - 1.0) - dt * Pk_d * Pk_d +
          k * (1.0 - 2.0 * Pk1_c + 2.0 * Pk_d * Pk1_d - Pk_d * Pk_d) -
          (1.0 - P2k_2d) * inv_b);
}

// CRPS of the zero-censored GEV.  Uses
//   CRPS = E|X - y| - E|X - X'|/2 - int_{-inf}^0 H^2,
// where H^2 is again a GEV law and both integrals reduce to upper incomplete
// gamma functions (exponential integral in the Gumbel limit).
inline double crps_cgev(double mu, double sigma, double xi, double y) {
  require(xi < 1.0, "censored GEV CRPS requires shape < 1");
  double ex, half_eabs, mu2, sigma2;
  if (std::fabs(xi) < 1e-8) {
    ex = mu + sigma * euler_mascheroni;
    half_eabs = sigma * 0.69314718055994530942;
    mu2 = mu + sigma * 0.69314718055994530942;
    sigma2 = sigma;
    xi = 0.0;
  } else {
    const double g1 = boost::math::tgamma(1.0 - xi);
    const double p2 = std::pow(2.0, xi);
    ex = mu + sigma * (g1 - 1.0) / xi;
    half_eabs = sigma * (p2 - 1.0) * g1 / xi;
    mu2 = mu + sigma * (p2 - 1.0) / xi;
    sigma2 = sigma * p2;
  }
  const double iy = gev_cdf_integral(mu, sigma, xi, y);
  const double c0 = gev_cdf_integral(mu2, sigma2, xi, 0.0);
  return ex - y + 2.0 * iy - half_eabs - c0;
}

}  // namespace detail

// Exact CRPS for the four predictive families.  Observations below zero are
// folded back with CRPS(F, x) = CRPS(F, 0) - x, valid for any law supported
// on [0, inf).
inline ScoreValue crps_closed(const DistributionSpec& d, double x) {
  detail::require(std::isfinite(x), "crps_closed: observation must be finite");
  const double shiftdown = (x < 0.0) ? -x : 0.0;
  const double y = std::max(x, 0.0);
  struct Eval {
    double y;
    double operator()(const TruncatedNormal& f) const {
      return detail::crps_truncnormal(f.mu, f.sigma, y);
    }
    double operator()(const LogNormal& f) const {
      return detail::crps_lognormal(f.mu, f.sigma, y);
    }
    double operator()(const CensoredShiftedGamma& f) const {
      return detail::crps_csgamma(f.shape, f.scale, f.shift, y);
    }
    double operator()(const CensoredGev& f) const {
      return detail::crps_cgev(f.location, f.scale, f.shape, y);
    }
    double operator()(const Beta&) const {
      throw NotImplementedError(
          "crps_closed: no closed form wired for the beta family; "
          "use crps_numeric");
    }
  };
  return {std::visit(Eval{y}, d) + shiftdown, ScoreKind::crps};
}

namespace detail {

template <class F>
double trapezoid(const F& f, double a, double b, int n) {
  const double h = (b - a) / (n - 1);
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n - 1; ++i) acc += f(a + i * h);
  return acc * h;
}

}  // namespace detail

// Trapezoidal CRPS of an arbitrary CDF on a fixed grid, split exactly at the
// observation.  Grid points are spread over the two segments in proportion
// to their lengths (at least two points per non-degenerate segment).
template <class Cdf>
ScoreValue crps_numeric(const Cdf& cdf_fn, double x,
                        const IntegrationGrid& grid) {
  detail::require(grid.n_points >= 2, "crps_numeric: grid needs >= 2 points");
  detail::require(grid.lower < grid.upper,
                  "crps_numeric: grid lower must lie below upper");
  if (x < grid.lower || x > grid.upper)
    throw DomainError("crps_numeric: observation outside integration grid");

  const double width = grid.upper - grid.lower;
  const double frac = (x - grid.lower) / width;
  double total = 0.0;
  if (x > grid.lower) {
    const int n1 = std::max(
        2, static_cast<int>(std::lround(frac * (grid.n_points - 1))) + 1);
    total += detail::trapezoid(
        [&](double t) { const double v = cdf_fn(t); return v * v; },
        grid.lower, x, n1);
  }
  if (x < grid.upper) {
    const int n2 = std::max(
        2,
        static_cast<int>(std::lround((1.0 - frac) * (grid.n_points - 1))) + 1);
    total += detail::trapezoid(
        [&](double t) { const double v = 1.0 - cdf_fn(t); return v * v; },
        x, grid.upper, n2);
  }
  return {total, ScoreKind::crps};
}

inline ScoreValue crps_numeric(const DistributionSpec& d, double x,
                               const IntegrationGrid& grid) {
  return crps_numeric([&d](double t) { return cdf(d, t); }, x, grid);
}

inline ScoreValue crps_numeric(const DistributionSpec& d, double x) {
  return crps_numeric(d, x, default_grid(d));
}

// Logarithmic score -log f(x); the atom mass stands in for the density at a
// censored zero.  Zero density gives +inf, which callers must expect.
inline ScoreValue logs(const DistributionSpec& d, double x) {
  detail::require(std::isfinite(x), "logs: observation must be finite");
  const double f = pdf(d, x);
  if (!(f > 0.0))
    return {std::numeric_limits<double>::infinity(), ScoreKind::logs};
  return {-std::log(f), ScoreKind::logs};
}

// Probability integral transform.
inline double pit(const DistributionSpec& d, double x) { return cdf(d, x); }

// Randomized PIT for laws with an atom at zero: a zero observation maps to
// u * F(0) with u ~ U(0,1) supplied by the caller; elsewhere it is F(x).
// For atom-free laws F(0) = 0 and the randomization is inert.
template <class Cdf>
double randomized_pit(const Cdf& cdf_fn, double x, double u) {
  detail::require(u >= 0.0 && u <= 1.0, "randomized_pit: u outside [0,1]");
  if (x <= 0.0) return u * cdf_fn(0.0);
  return cdf_fn(x);
}

inline double randomized_pit(const DistributionSpec& d, double x, double u) {
  return randomized_pit([&d](double t) { return cdf(d, t); }, x, u);
}

// CRPS of a raw ensemble treated as its empirical CDF:
//   CRPS = mean |f_i - x| - mean |f_i - f_j| / 2,
// the second mean running over all ordered pairs.  O(M log M) via sorting.
inline ScoreValue crps_ensemble(std::vector<double> members, double x) {
  detail::require(!members.empty(), "crps_ensemble: empty ensemble");
  const auto m = static_cast<double>(members.size());
  std::sort(members.begin(), members.end());
  double abs_err = 0.0;
  double pair_sum = 0.0;  // sum over i<j of f_(j) - f_(i)
  for (std::size_t j = 0; j < members.size(); ++j) {
    abs_err += std::fabs(members[j] - x);
    pair_sum += members[j] * (2.0 * static_cast<double>(j) + 1.0 - m);
  }
  return {abs_err / m - pair_sum / (m * m), ScoreKind::crps};
}

}  // namespace emospool

#endif  // EMOSPOOL_SCORING_HPP
