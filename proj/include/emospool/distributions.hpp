#ifndef EMOSPOOL_DISTRIBUTIONS_HPP
#define EMOSPOOL_DISTRIBUTIONS_HPP

// Parametric predictive laws used by the post-processing models: truncated
// normal and log-normal for wind speed, censored shifted gamma and censored
// GEV for precipitation, plus the beta law used by calibration transforms.
// Censored families carry a point mass at zero; their pdf() is the
// generalized density (continuous part for x > 0, atom size at x = 0).

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "emospool/errors.hpp"

namespace emospool {

inline constexpr double euler_mascheroni = 0.5772156649015328606;
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779;

namespace detail {

inline void require(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

inline double std_normal_pdf(double z) {
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double std_normal_cdf(double z) {
  // erfc keeps relative accuracy in the lower tail.
  return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

inline double std_normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal quantile: p outside (0,1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

inline double gamma_cdf(double shape, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x);
}

// Upper incomplete gamma Gamma(a, x) for x > 0, extended to a in (-1, 0)
// through Gamma(a, x) = (Gamma(a+1, x) - x^a e^-x) / a.
inline double upper_inc_gamma(double a, double x) {
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  return (boost::math::tgamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Families

// Normal law left-truncated at zero: g(x) = phi((x-mu)/sigma) / (sigma
// Phi(mu/sigma)) for x >= 0.  mu may be negative; sigma must be positive.
struct TruncatedNormal {
  double mu;
  double sigma;
  TruncatedNormal(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
    detail::require(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0,
                    "truncated normal: sigma must be positive and finite");
  }
};

struct LogNormal {
  double mu;     // mean of log X
  double sigma;  // sd of log X
  LogNormal(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
    detail::require(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0,
                    "log-normal: sigma must be positive and finite");
  }
};

// Gamma(shape, scale) shifted left by `shift` and censored at zero:
// F(x) = G(x + shift) for x >= 0, with atom G(shift) at zero.
struct CensoredShiftedGamma {
  double shape;
  double scale;
  double shift;
  CensoredShiftedGamma(double shape_, double scale_, double shift_)
      : shape(shape_), scale(scale_), shift(shift_) {
    detail::require(std::isfinite(shape) && shape > 0.0 &&
                        std::isfinite(scale) && scale > 0.0 &&
                        std::isfinite(shift) && shift > 0.0,
                    "censored shifted gamma: shape, scale, shift must be "
                    "positive and finite");
  }
};

// GEV(location, scale, shape) censored at zero: F(x) = H(x) for x >= 0,
// atom H(0) at zero.  shape follows the Fisher-Tippett sign convention
// (shape > 0: heavy upper tail).
struct CensoredGev {
  double location;
  double scale;
  double shape;
  CensoredGev(double location_, double scale_, double shape_)
      : location(location_), scale(scale_), shape(shape_) {
    detail::require(std::isfinite(location) && std::isfinite(scale) &&
                        scale > 0.0 && std::isfinite(shape),
                    "censored GEV: scale must be positive and finite");
  }
};

struct Beta {
  double alpha;
  double beta;
  Beta(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    detail::require(std::isfinite(alpha) && alpha > 0.0 &&
                        std::isfinite(beta) && beta > 0.0,
                    "beta: both shape parameters must be positive and finite");
  }
};

using DistributionSpec = std::variant<TruncatedNormal, LogNormal,
                                      CensoredShiftedGamma, CensoredGev, Beta>;

// ---------------------------------------------------------------------------
// Uncensored GEV pieces shared by cdf/quantile/scoring.

namespace detail {

inline double gev_cdf_raw(double x, double mu, double sigma, double xi) {
  const double z = (x - mu) / sigma;
  if (xi == 0.0) return std::exp(-std::exp(-z));
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(t, -1.0 / xi));
}

inline double gev_pdf_raw(double x, double mu, double sigma, double xi) {
  const double z = (x - mu) / sigma;
  if (xi == 0.0) {
    const double w = std::exp(-z);
    return w * std::exp(-w) / sigma;
  }
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return 0.0;
  const double w = std::pow(t, -1.0 / xi);
  return w / (t * sigma) * std::exp(-w);
}

inline double gev_quantile_raw(double p, double mu, double sigma, double xi) {
  const double lw = -std::log(p);  // -log H = (1 + xi z)^(-1/xi)
  if (xi == 0.0) return mu - sigma * std::log(lw);
  return mu + sigma * (std::pow(lw, -xi) - 1.0) / xi;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cdf

inline double cdf(const TruncatedNormal& d, double x) {
  if (x < 0.0) return 0.0;
  const double c = d.mu / d.sigma;
  const double denom = detail::std_normal_cdf(c);
  detail::require(denom > 0.0, "truncated normal: no mass on [0, inf)");
  const double z = (x - d.mu) / d.sigma;
  const double v = (detail::std_normal_cdf(z) - detail::std_normal_cdf(-c)) / denom;
  return std::min(1.0, std::max(0.0, v));
}

inline double cdf(const LogNormal& d, double x) {
  if (x <= 0.0) return 0.0;
  return detail::std_normal_cdf((std::log(x) - d.mu) / d.sigma);
}

inline double cdf(const CensoredShiftedGamma& d, double x) {
  if (x < 0.0) return 0.0;
  return detail::gamma_cdf(d.shape, (x + d.shift) / d.scale);
}

inline double cdf(const CensoredGev& d, double x) {
  if (x < 0.0) return 0.0;
  return detail::gev_cdf_raw(x, d.location, d.scale, d.shape);
}

inline double cdf(const Beta& d, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(d.alpha, d.beta, x);
}

inline double cdf(const DistributionSpec& d, double x) {
  return std::visit([x](const auto& f) { return cdf(f, x); }, d);
}

// ---------------------------------------------------------------------------
// pdf (generalized: atom size at x = 0 for censored families)

inline double pdf(const TruncatedNormal& d, double x) {
  if (x < 0.0) return 0.0;
  const double denom = detail::std_normal_cdf(d.mu / d.sigma);
  detail::require(denom > 0.0, "truncated normal: no mass on [0, inf)");
  return detail::std_normal_pdf((x - d.mu) / d.sigma) / (d.sigma * denom);
}

inline double pdf(const LogNormal& d, double x) {
  if (x <= 0.0) return 0.0;
  return detail::std_normal_pdf((std::log(x) - d.mu) / d.sigma) /
         (x * d.sigma);
}

inline double pdf(const CensoredShiftedGamma& d, double x) {
  if (x < 0.0) return 0.0;
  const double u = (x + d.shift) / d.scale;
  if (x == 0.0) return detail::gamma_cdf(d.shape, u);  // atom
  return boost::math::gamma_p_derivative(d.shape, u) / d.scale;
}

inline double pdf(const CensoredGev& d, double x) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return detail::gev_cdf_raw(0.0, d.location, d.scale, d.shape);
  return detail::gev_pdf_raw(x, d.location, d.scale, d.shape);
}

inline double pdf(const Beta& d, double x) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x == 0.0 || x == 1.0) {
    // Density limit: finite only when the corresponding shape exceeds 1.
    const double a = (x == 0.0) ? d.alpha : d.beta;
    if (a > 1.0) return 0.0;
    if (a == 1.0) return (x == 0.0) ? d.beta : d.alpha;
    return std::numeric_limits<double>::infinity();
  }
  return boost::math::ibeta_derivative(d.alpha, d.beta, x);
}

inline double pdf(const DistributionSpec& d, double x) {
  return std::visit([x](const auto& f) { return pdf(f, x); }, d);
}

// ---------------------------------------------------------------------------
// point mass at zero

inline double point_mass_at_zero(const TruncatedNormal&) { return 0.0; }
inline double point_mass_at_zero(const LogNormal&) { return 0.0; }
inline double point_mass_at_zero(const CensoredShiftedGamma& d) {
  return detail::gamma_cdf(d.shape, d.shift / d.scale);
}
inline double point_mass_at_zero(const CensoredGev& d) {
  return detail::gev_cdf_raw(0.0, d.location, d.scale, d.shape);
}
inline double point_mass_at_zero(const Beta&) { return 0.0; }

inline double point_mass_at_zero(const DistributionSpec& d) {
  return std::visit([](const auto& f) { return point_mass_at_zero(f); }, d);
}

// ---------------------------------------------------------------------------
// quantile

inline double quantile(const TruncatedNormal& d, double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile: p outside (0,1)");
  const double c = d.mu / d.sigma;
  const double lo = detail::std_normal_cdf(-c);
  const double mass = detail::std_normal_cdf(c);
  detail::require(mass > 0.0, "truncated normal: no mass on [0, inf)");
  const double q = lo + p * mass;
  if (q >= 1.0) return d.mu + d.sigma * detail::std_normal_quantile(
                    std::nextafter(1.0, 0.0));
  return d.mu + d.sigma * detail::std_normal_quantile(q);
}

inline double quantile(const LogNormal& d, double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile: p outside (0,1)");
  return std::exp(d.mu + d.sigma * detail::std_normal_quantile(p));
}

inline double quantile(const CensoredShiftedGamma& d, double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile: p outside (0,1)");
  if (p <= point_mass_at_zero(d)) return 0.0;
  return d.scale * boost::math::gamma_p_inv(d.shape, p) - d.shift;
}

inline double quantile(const CensoredGev& d, double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile: p outside (0,1)");
  if (p <= point_mass_at_zero(d)) return 0.0;
  return detail::gev_quantile_raw(p, d.location, d.scale, d.shape);
}

inline double quantile(const Beta& d, double p) {
  detail::require(p > 0.0 && p < 1.0, "quantile: p outside (0,1)");
  return boost::math::ibeta_inv(d.alpha, d.beta, p);
}

inline double quantile(const DistributionSpec& d, double p) {
  return std::visit([p](const auto& f) { return quantile(f, p); }, d);
}

// ---------------------------------------------------------------------------
// mean

inline double mean(const TruncatedNormal& d) {
  const double c = d.mu / d.sigma;
  const double mass = detail::std_normal_cdf(c);
  detail::require(mass > 0.0, "truncated normal: no mass on [0, inf)");
  return d.mu + d.sigma * detail::std_normal_pdf(c) / mass;
}

inline double mean(const LogNormal& d) {
  return std::exp(d.mu + 0.5 * d.sigma * d.sigma);
}

inline double mean(const CensoredShiftedGamma& d) {
  // E max(Y - shift, 0) for Y ~ Gamma(shape, scale).
  const double u = d.shift / d.scale;
  const double m = d.shape * d.scale;
  return m * (1.0 - detail::gamma_cdf(d.shape + 1.0, u)) -
         d.shift * (1.0 - detail::gamma_cdf(d.shape, u));
}

namespace detail {

// int_{-inf}^{y} H(t) dt for the uncensored GEV; needed for means and CRPS.
// Substituting w = -log H(t) gives sigma * Gamma(-xi, w(y)) plus a linear
// overshoot when y exceeds the finite upper endpoint (xi < 0).
inline double gev_cdf_integral(double mu, double sigma, double xi, double y) {
  double yy = y;
  double overshoot = 0.0;
  if (xi < 0.0) {
    const double ub = mu - sigma / xi;
    if (y > ub) {
      overshoot = y - ub;
      yy = ub;
    }
  }
  const double h = gev_cdf_raw(yy, mu, sigma, xi);
  if (h <= 0.0) return 0.0;
  if (h >= 1.0) {
    // Only reachable at the upper endpoint with xi < 0 where w = 0.
    return sigma * boost::math::tgamma(-xi) + overshoot;
  }
  const double w = -std::log(h);
  if (xi == 0.0) return sigma * boost::math::expint(1, w) + overshoot;
  return sigma * upper_inc_gamma(-xi, w) + overshoot;
}

}  // namespace detail

inline double gev_mean_uncensored(double mu, double sigma, double xi) {
  detail::require(xi < 1.0, "GEV mean requires shape < 1");
  if (xi == 0.0) return mu + sigma * euler_mascheroni;
  return mu + sigma * (boost::math::tgamma(1.0 - xi) - 1.0) / xi;
}

inline double mean(const CensoredGev& d) {
  detail::require(d.shape < 1.0, "censored GEV mean requires shape < 1");
  // E max(X, 0) = E X + int_{-inf}^0 H.
  return gev_mean_uncensored(d.location, d.scale, d.shape) +
         detail::gev_cdf_integral(d.location, d.scale, d.shape, 0.0);
}

inline double mean(const Beta& d) { return d.alpha / (d.alpha + d.beta); }

inline double mean(const DistributionSpec& d) {
  return std::visit([](const auto& f) { return mean(f); }, d);
}

// ---------------------------------------------------------------------------
// sampling by inversion (exact for every family, atoms included)

template <class Rng>
double sample(const DistributionSpec& d, Rng& rng) {
  std::uniform_real_distribution<double> u01(
      std::numeric_limits<double>::min(), 1.0);
  return quantile(d, u01(rng));
}

// ---------------------------------------------------------------------------
// moment -> parameter transforms

// (mean, variance) of a log-normal variable to (mu, sigma) of its logarithm.
inline LogNormal moments_to_lognormal(double m, double v) {
  detail::require(std::isfinite(m) && m > 0.0, "moments_to_lognormal: mean must be positive");
  detail::require(std::isfinite(v) && v > 0.0, "moments_to_lognormal: variance must be positive");
  const double s2 = std::log(1.0 + v / (m * m));
  const double mu = std::log(m) - 0.5 * s2;  // = log(m^2 / sqrt(v + m^2))
  return LogNormal(mu, std::sqrt(s2));
}

// (mean, variance) of a gamma variable to (shape, scale).
inline std::pair<double, double> moments_to_gamma(double m, double v) {
  detail::require(std::isfinite(m) && m > 0.0, "moments_to_gamma: mean must be positive");
  detail::require(std::isfinite(v) && v > 0.0, "moments_to_gamma: variance must be positive");
  return {m * m / v, v / m};
}

// Location of a GEV with the given mean, scale and shape.  The Gumbel branch
// is taken for |xi| below a small threshold where (Gamma(1-xi)-1)/xi would
// lose precision; the two branches agree there to ~1e-8 relative.
inline double gev_location_from_mean(double m, double sigma, double xi) {
  detail::require(std::isfinite(m) && std::isfinite(sigma) && sigma > 0.0,
                  "gev_location_from_mean: scale must be positive");
  detail::require(xi < 1.0, "gev_location_from_mean: mean requires shape < 1");
  if (std::fabs(xi) < 1e-8) return m - sigma * euler_mascheroni;
  return m - sigma * (boost::math::tgamma(1.0 - xi) - 1.0) / xi;
}

inline const char* family_name(const DistributionSpec& d) {
  struct Namer {
    const char* operator()(const TruncatedNormal&) { return "truncated-normal"; }
    const char* operator()(const LogNormal&) { return "log-normal"; }
    const char* operator()(const CensoredShiftedGamma&) { return "censored-shifted-gamma"; }
    const char* operator()(const CensoredGev&) { return "censored-gev"; }
    const char* operator()(const Beta&) { return "beta"; }
  };
  return std::visit(Namer{}, d);
}

}  // namespace emospool

#endif  // EMOSPOOL_DISTRIBUTIONS_HPP
