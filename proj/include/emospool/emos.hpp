#ifndef EMOSPOOL_EMOS_HPP
#define EMOSPOOL_EMOS_HPP

// EMOS predictive links and their estimation.  Each link maps an ensemble
// forecast to the parameters of one predictive family; coefficients are
// shared within exchangeable member groups, so location terms use group sums.
// Estimation minimizes the mean CRPS (or LogS) over a regional training
// window with BFGS on smoothly reparametrized coefficients.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "emospool/distributions.hpp"
#include "emospool/errors.hpp"
#include "emospool/optim.hpp"
#include "emospool/scoring.hpp"

namespace emospool {

enum class Variable { wind_speed, precipitation };

enum class Family {
  truncated_normal,
  log_normal,
  censored_shifted_gamma,
  censored_gev,
  tn_ln_mixture,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::truncated_normal: return "tn";
    case Family::log_normal: return "ln";
    case Family::censored_shifted_gamma: return "csg";
    case Family::censored_gev: return "gev";
    case Family::tn_ln_mixture: return "tnln";
  }
  return "?";
}

enum class FitObjective { min_crps, max_likelihood };

// One ensemble forecast: member values partitioned into exchangeable groups.
// The group partition must be identical across a data set.
struct EnsembleForecast {
  std::int32_t date = 0;  // days since 1970-01-01
  std::string station;
  std::vector<std::vector<double>> groups;
  Variable variable = Variable::wind_speed;

  std::size_t member_count() const {
    std::size_t m = 0;
    for (const auto& g : groups) m += g.size();
    return m;
  }
};

struct TrainingCase {
  EnsembleForecast forecast;
  double observation = 0.0;
};

// Regional training window: all stations pooled, one coefficient set.
struct TrainingWindow {
  std::vector<TrainingCase> cases;
};

struct EnsembleStats {
  double mean = 0.0;
  double variance = 0.0;       // denominator M - 1, over all members jointly
  double zero_fraction = 0.0;  // share of members equal to zero
  double mean_abs_diff = 0.0;  // over all ordered pairs incl. self, / M^2
};

// Member-order invariant: values are sorted before any reduction, so
// permuting members (within or across groups) cannot change rounding.
inline EnsembleStats ensemble_stats(const EnsembleForecast& e) {
  std::vector<double> m;
  m.reserve(e.member_count());
  for (const auto& g : e.groups) m.insert(m.end(), g.begin(), g.end());
  if (m.size() < 2)
    throw DegenerateError("ensemble_stats: need at least two members");
  std::sort(m.begin(), m.end());

  const double n = static_cast<double>(m.size());
  EnsembleStats s;
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : m) {
    sum += v;
    if (v == 0.0) ++zeros;
  }
  s.mean = sum / n;
  double ss = 0.0;
  double pair_sum = 0.0;  // sum over i<j of f_(j) - f_(i)
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double d = m[j] - s.mean;
    ss += d * d;
    pair_sum += m[j] * (2.0 * static_cast<double>(j) + 1.0 - n);
  }
  s.variance = ss / (n - 1.0);
  s.zero_fraction = static_cast<double>(zeros) / n;
  s.mean_abs_diff = 2.0 * pair_sum / (n * n);
  return s;
}

// Sum of each group's members (sorted first for permutation invariance).
inline std::vector<double> group_sums(const EnsembleForecast& e) {
  std::vector<double> sums;
  sums.reserve(e.groups.size());
  std::vector<double> buf;
  for (const auto& g : e.groups) {
    buf.assign(g.begin(), g.end());
    std::sort(buf.begin(), buf.end());
    double acc = 0.0;
    for (double v : buf) acc += v;
    sums.push_back(acc);
  }
  return sums;
}

// ---------------------------------------------------------------------------
// Coefficients

// One coefficient set.  mean_coeffs = (a0, a1..aK) against (1, group sums).
// The spread pair acts on family-specific predictors: ensemble variance for
// the wind families, ensemble mean (CSG) or mean absolute difference (GEV).
// The TN-LN mixture carries a second coefficient block for its LN member.
struct EmosCoefficients {
  Family family = Family::truncated_normal;
  std::vector<double> mean_coeffs;
  double spread0 = 1.0;
  double spread1 = 1.0;
  double shift_delta = 1.0;  // CSG only
  double shape_xi = 0.0;     // GEV only
  double nu = 0.0;           // GEV only: weight of the dry-member fraction
  double omega = 1.0;        // TN-LN mixture weight on the TN part
  std::vector<double> ln_mean_coeffs;
  double ln_spread0 = 1.0;
  double ln_spread1 = 1.0;
};

namespace detail {

// Per-case quantities reused across optimizer iterations.
struct PreparedCase {
  std::vector<double> sums;
  EnsembleStats stats;
  double obs = 0.0;
};

inline PreparedCase prepare_case(const EnsembleForecast& e, double obs) {
  return {group_sums(e), ensemble_stats(e), obs};
}

inline double linear_mean(const std::vector<double>& coeffs,
                          const std::vector<double>& sums) {
  require(coeffs.size() == sums.size() + 1,
          "EMOS coefficients do not match the ensemble group layout");
  double acc = coeffs[0];
  for (std::size_t k = 0; k < sums.size(); ++k) acc += coeffs[k + 1] * sums[k];
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictive links

namespace detail {

inline TruncatedNormal tn_predictive_prepared(const EmosCoefficients& c,
                                              const PreparedCase& p) {
  const double loc = linear_mean(c.mean_coeffs, p.sums);
  const double var = c.spread0 + c.spread1 * p.stats.variance;
  require(var > 0.0, "TN link: nonpositive predictive variance");
  return TruncatedNormal(loc, std::sqrt(var));
}

inline LogNormal ln_predictive_prepared(const EmosCoefficients& c,
                                        const PreparedCase& p) {
  const double m = linear_mean(c.mean_coeffs, p.sums);
  const double v = c.spread0 + c.spread1 * p.stats.variance;
  require(m > 0.0, "LN link: nonpositive predictive mean");
  require(v > 0.0, "LN link: nonpositive predictive variance");
  return moments_to_lognormal(m, v);
}

inline CensoredShiftedGamma csg_predictive_prepared(const EmosCoefficients& c,
                                                    const PreparedCase& p) {
  const double m = linear_mean(c.mean_coeffs, p.sums);
  const double v = c.spread0 + c.spread1 * p.stats.mean;
  require(m > 0.0, "CSG link: nonpositive predictive mean");
  require(v > 0.0, "CSG link: nonpositive predictive variance");
  const auto [shape, scale] = moments_to_gamma(m, v);
  return CensoredShiftedGamma(shape, scale, c.shift_delta);
}

inline CensoredGev gev_predictive_prepared(const EmosCoefficients& c,
                                           const PreparedCase& p) {
  const double m = detail::linear_mean(c.mean_coeffs, p.sums) +
                   c.nu * p.stats.zero_fraction;
  const double sigma = c.spread0 + c.spread1 * p.stats.mean_abs_diff;
  require(sigma > 0.0, "GEV link: nonpositive predictive scale");
  const double mu = gev_location_from_mean(m, sigma, c.shape_xi);
  return CensoredGev(mu, sigma, c.shape_xi);
}

}  // namespace detail

inline TruncatedNormal tn_predictive(const EmosCoefficients& c,
                                     const EnsembleForecast& e) {
  return detail::tn_predictive_prepared(c, detail::prepare_case(e, 0.0));
}

inline LogNormal ln_predictive(const EmosCoefficients& c,
                               const EnsembleForecast& e) {
  return detail::ln_predictive_prepared(c, detail::prepare_case(e, 0.0));
}

inline CensoredShiftedGamma csg_predictive(const EmosCoefficients& c,
                                           const EnsembleForecast& e) {
  return detail::csg_predictive_prepared(c, detail::prepare_case(e, 0.0));
}

inline CensoredGev gev_predictive(const EmosCoefficients& c,
                                  const EnsembleForecast& e) {
  return detail::gev_predictive_prepared(c, detail::prepare_case(e, 0.0));
}

// Convex TN/LN mixture fitted jointly by maximum likelihood.
struct TnLnMixture {
  TruncatedNormal tn;
  LogNormal ln;
  double weight;  // on the TN part, in [0, 1]
};

inline double cdf(const TnLnMixture& m, double x) {
  return m.weight * cdf(m.tn, x) + (1.0 - m.weight) * cdf(m.ln, x);
}

inline double pdf(const TnLnMixture& m, double x) {
  return m.weight * pdf(m.tn, x) + (1.0 - m.weight) * pdf(m.ln, x);
}

inline TnLnMixture tnln_predictive(const EmosCoefficients& c,
                                   const EnsembleForecast& e) {
  detail::require(c.family == Family::tn_ln_mixture,
                  "tnln_predictive: coefficients not a TN-LN mixture");
  detail::require(c.omega >= 0.0 && c.omega <= 1.0,
                  "tnln_predictive: weight outside [0,1]");
  const auto p = detail::prepare_case(e, 0.0);
  EmosCoefficients ln_part;
  ln_part.family = Family::log_normal;
  ln_part.mean_coeffs = c.ln_mean_coeffs;
  ln_part.spread0 = c.ln_spread0;
  ln_part.spread1 = c.ln_spread1;
  return {detail::tn_predictive_prepared(c, p),
          detail::ln_predictive_prepared(ln_part, p), c.omega};
}

// Dispatch on the family tag.  The TN-LN mixture is not a single law; ask
// tnln_predictive for it instead.
inline DistributionSpec predictive(const EmosCoefficients& c,
                                   const EnsembleForecast& e) {
  switch (c.family) {
    case Family::truncated_normal: return tn_predictive(c, e);
    case Family::log_normal: return ln_predictive(c, e);
    case Family::censored_shifted_gamma: return csg_predictive(c, e);
    case Family::censored_gev: return gev_predictive(c, e);
    case Family::tn_ln_mixture: break;
  }
  throw DomainError("predictive: tn_ln_mixture is not a single law");
}

// Generalized density of the CSG/GEV mixture: continuous part for x > 0,
// combined atom at x = 0.
inline double csg_gev_mixture_density(const CensoredShiftedGamma& g,
                                      const CensoredGev& h, double w,
                                      double x) {
  detail::require(w >= 0.0 && w <= 1.0,
                  "csg_gev_mixture_density: weight outside [0,1]");
  if (x < 0.0) return 0.0;
  return w * pdf(g, x) + (1.0 - w) * pdf(h, x);
}

// ---------------------------------------------------------------------------
// Fitting

struct FitResult {
  EmosCoefficients coefficients;
  bool converged = false;
  int iterations = 0;
  int n_cases = 0;
  double objective = 0.0;          // mean score at the returned coefficients
  double objective_at_init = 0.0;  // mean score at the starting point
};

namespace detail {

constexpr double kInfeasiblePenalty = 1e6;

// Family parametrizations: a smooth bijection between the coefficient struct
// and the optimizer's unconstrained vector.  Wind families keep the location
// intercept free but force member weights and both spread coefficients
// nonnegative (softplus), so collinear members cannot push the predictive
// law off its support on cases outside the training window; precipitation
// families force every link coefficient nonnegative; the GEV shape is
// confined to (-0.25, 0.70) by a scaled logistic.

constexpr double kXiLow = -0.25;
constexpr double kXiSpan = 0.95;

inline void pack_wind(const EmosCoefficients& c, std::vector<double>& u) {
  u.push_back(c.mean_coeffs.front());
  for (std::size_t i = 1; i < c.mean_coeffs.size(); ++i)
    u.push_back(softplus_inv(c.mean_coeffs[i]));
  u.push_back(softplus_inv(c.spread0));
  u.push_back(softplus_inv(c.spread1));
}

inline void unpack_wind(const double* u, std::size_t k_groups,
                        EmosCoefficients& c) {
  c.mean_coeffs.resize(k_groups + 1);
  c.mean_coeffs[0] = u[0];
  for (std::size_t i = 1; i <= k_groups; ++i)
    c.mean_coeffs[i] = softplus(u[i]);
  c.spread0 = softplus(u[k_groups + 1]);
  c.spread1 = softplus(u[k_groups + 2]);
}

inline std::vector<double> pack(const EmosCoefficients& c) {
  std::vector<double> u;
  switch (c.family) {
    case Family::truncated_normal:
    case Family::log_normal:
      pack_wind(c, u);
      break;
    case Family::censored_shifted_gamma:
      for (double a : c.mean_coeffs) u.push_back(softplus_inv(a));
      u.push_back(softplus_inv(c.spread0));
      u.push_back(softplus_inv(c.spread1));
      u.push_back(softplus_inv(c.shift_delta));
      break;
    case Family::censored_gev:
      for (double a : c.mean_coeffs) u.push_back(softplus_inv(a));
      u.push_back(c.nu);
      u.push_back(softplus_inv(c.spread0));
      u.push_back(softplus_inv(c.spread1));
      u.push_back(logit((std::min(std::max(c.shape_xi, kXiLow + 1e-6),
                                  kXiLow + kXiSpan - 1e-6) -
                         kXiLow) /
                        kXiSpan));
      break;
    case Family::tn_ln_mixture: {
      pack_wind(c, u);
      EmosCoefficients ln_part;
      ln_part.mean_coeffs = c.ln_mean_coeffs;
      ln_part.spread0 = c.ln_spread0;
      ln_part.spread1 = c.ln_spread1;
      pack_wind(ln_part, u);
      u.push_back(logit(c.omega));
      break;
    }
  }
  return u;
}

inline EmosCoefficients unpack(Family family, std::size_t k_groups,
                               const std::vector<double>& u) {
  EmosCoefficients c;
  c.family = family;
  switch (family) {
    case Family::truncated_normal:
    case Family::log_normal:
      unpack_wind(u.data(), k_groups, c);
      break;
    case Family::censored_shifted_gamma: {
      c.mean_coeffs.resize(k_groups + 1);
      for (std::size_t i = 0; i <= k_groups; ++i)
        c.mean_coeffs[i] = softplus(u[i]);
      c.spread0 = softplus(u[k_groups + 1]);
      c.spread1 = softplus(u[k_groups + 2]);
      c.shift_delta = softplus(u[k_groups + 3]);
      break;
    }
    case Family::censored_gev: {
      c.mean_coeffs.resize(k_groups + 1);
      for (std::size_t i = 0; i <= k_groups; ++i)
        c.mean_coeffs[i] = softplus(u[i]);
      c.nu = u[k_groups + 1];
      c.spread0 = softplus(u[k_groups + 2]);
      c.spread1 = softplus(u[k_groups + 3]);
      c.shape_xi = kXiLow + kXiSpan * logistic(u[k_groups + 4]);
      break;
    }
    case Family::tn_ln_mixture: {
      unpack_wind(u.data(), k_groups, c);
      EmosCoefficients ln_part;
      unpack_wind(u.data() + k_groups + 3, k_groups, ln_part);
      c.ln_mean_coeffs = ln_part.mean_coeffs;
      c.ln_spread0 = ln_part.spread0;
      c.ln_spread1 = ln_part.spread1;
      c.omega = logistic(u[2 * (k_groups + 3)]);
      break;
    }
  }
  return c;
}

// Mean score over prepared cases; infeasible link outputs contribute a large
// smooth penalty that steers the optimizer back into the feasible region.
inline double window_objective(const EmosCoefficients& c,
                               const std::vector<PreparedCase>& cases,
                               FitObjective objective) {
  double acc = 0.0;
  for (const auto& p : cases) {
    double score;
    try {
      DistributionSpec spec = TruncatedNormal(0.0, 1.0);
      switch (c.family) {
        case Family::truncated_normal:
          spec = tn_predictive_prepared(c, p);
          break;
        case Family::log_normal:
          spec = ln_predictive_prepared(c, p);
          break;
        case Family::censored_shifted_gamma:
          spec = csg_predictive_prepared(c, p);
          break;
        case Family::censored_gev:
          spec = gev_predictive_prepared(c, p);
          break;
        case Family::tn_ln_mixture: {
          EmosCoefficients ln_part;
          ln_part.family = Family::log_normal;
          ln_part.mean_coeffs = c.ln_mean_coeffs;
          ln_part.spread0 = c.ln_spread0;
          ln_part.spread1 = c.ln_spread1;
          const TnLnMixture mix{tn_predictive_prepared(c, p),
                                ln_predictive_prepared(ln_part, p), c.omega};
          const double dens = pdf(mix, p.obs);
          score = dens > 0.0 ? -std::log(dens) : kInfeasiblePenalty;
          acc += std::isfinite(score) ? score : kInfeasiblePenalty;
          continue;
        }
      }
      score = objective == FitObjective::min_crps
                  ? crps_closed(spec, p.obs).value
                  : logs(spec, p.obs).value;
    } catch (const DomainError&) {
      score = kInfeasiblePenalty;
    }
    acc += std::isfinite(score) ? score : kInfeasiblePenalty;
  }
  return acc / static_cast<double>(cases.size());
}

inline std::vector<PreparedCase> prepare_window(const TrainingWindow& w) {
  if (w.cases.empty())
    throw DegenerateError("fit_emos: empty training window");
  std::vector<PreparedCase> cases;
  cases.reserve(w.cases.size());
  const std::size_t k = w.cases.front().forecast.groups.size();
  bool all_equal = true;
  for (const auto& tc : w.cases) {
    if (tc.forecast.groups.size() != k)
      throw DataError("fit_emos: inconsistent group layout inside window");
    if (tc.observation != w.cases.front().observation) all_equal = false;
    cases.push_back(prepare_case(tc.forecast, tc.observation));
  }
  if (all_equal)
    throw DegenerateError(
        "fit_emos: all observations in the window are identical");
  return cases;
}

}  // namespace detail

inline EmosCoefficients default_init(Family family,
                                     const EnsembleForecast& shape_like) {
  const std::size_t k = shape_like.groups.size();
  const double per_member = 1.0 / static_cast<double>(
                                      std::max<std::size_t>(
                                          1, shape_like.member_count()));
  EmosCoefficients c;
  c.family = family;
  c.mean_coeffs.assign(k + 1, per_member);
  // Wind families start at a0 = 0; the softplus-constrained precipitation
  // families need a strictly positive intercept.
  c.mean_coeffs[0] =
      (family == Family::censored_shifted_gamma ||
       family == Family::censored_gev)
          ? 0.1
          : 0.0;
  c.spread0 = 1.0;
  c.spread1 = 1.0;
  switch (family) {
    case Family::censored_shifted_gamma:
      c.spread0 = 0.5;
      c.spread1 = 0.5;
      c.shift_delta = 0.5;
      break;
    case Family::censored_gev:
      c.spread0 = 0.3;
      c.spread1 = 0.5;
      c.shape_xi = 0.15;
      c.nu = 0.0;
      break;
    case Family::tn_ln_mixture:
      c.ln_mean_coeffs = c.mean_coeffs;
      c.ln_spread0 = 1.0;
      c.ln_spread1 = 1.0;
      c.omega = 0.5;
      break;
    default:
      break;
  }
  return c;
}

inline FitResult fit_emos(Family family, const TrainingWindow& window,
                          FitObjective objective = FitObjective::min_crps,
                          std::optional<EmosCoefficients> init = std::nullopt,
                          const OptimOptions& optim = {}) {
  const auto cases = detail::prepare_window(window);
  const std::size_t k = window.cases.front().forecast.groups.size();

  EmosCoefficients start =
      init ? *init : default_init(family, window.cases.front().forecast);
  detail::require(start.family == family,
                  "fit_emos: init coefficients are for a different family");
  detail::require(start.mean_coeffs.size() == k + 1,
                  "fit_emos: init coefficients do not match group layout");

  const auto obj_fn = [&](const std::vector<double>& u) {
    return detail::window_objective(detail::unpack(family, k, u), cases,
                                    objective);
  };
  const std::vector<double> u0 = detail::pack(start);
  const OptimResult opt = minimize(obj_fn, u0, optim);

  FitResult fr;
  fr.coefficients = detail::unpack(family, k, opt.x);
  fr.converged = opt.converged;
  fr.iterations = opt.iterations;
  fr.n_cases = static_cast<int>(cases.size());
  fr.objective = opt.f;
  fr.objective_at_init = obj_fn(u0);
  if (fr.objective_at_init < fr.objective) {
    // minimize() never returns a point worse than its start, but keep the
    // guarantee explicit.
    fr.coefficients = start;
    fr.objective = fr.objective_at_init;
  }
  return fr;
}

// Joint maximum-likelihood fit of the TN-LN mixture.  Without an explicit
// init the two pure laws are fitted first and the mixture starts from three
// deterministic weights (balanced, near-TN, near-LN); the best final
// objective wins, so the mixture never scores worse than either pure fit's
// neighborhood.
inline FitResult fit_tnln_mixture(
    const TrainingWindow& window,
    std::optional<EmosCoefficients> init = std::nullopt,
    const OptimOptions& optim = {}) {
  if (init)
    return fit_emos(Family::tn_ln_mixture, window, FitObjective::max_likelihood,
                    init, optim);

  const FitResult tn = fit_emos(Family::truncated_normal, window,
                                FitObjective::max_likelihood, std::nullopt,
                                optim);
  const FitResult ln = fit_emos(Family::log_normal, window,
                                FitObjective::max_likelihood, std::nullopt,
                                optim);
  EmosCoefficients base;
  base.family = Family::tn_ln_mixture;
  base.mean_coeffs = tn.coefficients.mean_coeffs;
  base.spread0 = tn.coefficients.spread0;
  base.spread1 = tn.coefficients.spread1;
  base.ln_mean_coeffs = ln.coefficients.mean_coeffs;
  base.ln_spread0 = ln.coefficients.spread0;
  base.ln_spread1 = ln.coefficients.spread1;

  std::optional<FitResult> best;
  for (double w : {0.5, 0.995, 0.005}) {
    EmosCoefficients c = base;
    c.omega = w;
    FitResult fr = fit_emos(Family::tn_ln_mixture, window,
                            FitObjective::max_likelihood, c, optim);
    if (!best || fr.objective < best->objective) best = fr;
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Rolling estimation

struct RollingOptions {
  int window_days = 30;
  FitObjective objective = FitObjective::min_crps;
  // Seeding each day with the previous day's fit roughly halves iteration
  // counts but measurably degrades the fits: once a softplus-linked weight
  // is driven to zero its packed-space gradient vanishes, so the chain can
  // never revive it, and the stuck optima propagate forward.  Cold starts
  // re-centre every day and win on both training and held-out CRPS.
  bool warm_start = false;
  bool parallel = false;  // cold-start fits across days on worker threads
  OptimOptions optim;
};

struct RollingFit {
  std::map<std::int32_t, FitResult> by_date;
  std::vector<std::int32_t> skipped_dates;  // not enough prior history
};

// Fits one coefficient set per target date from the nearest window_days
// distinct prior dates (gaps in the record extend the lookback).  Sequential
// warm-start mode is bit-reproducible; parallel mode cold-starts every day.
inline RollingFit rolling_fit(const std::vector<TrainingCase>& cases,
                              Family family, const RollingOptions& opts) {
  std::map<std::int32_t, std::vector<const TrainingCase*>> by_date;
  for (const auto& tc : cases) by_date[tc.forecast.date].push_back(&tc);

  std::vector<std::int32_t> dates;
  dates.reserve(by_date.size());
  for (const auto& [d, _] : by_date) dates.push_back(d);

  RollingFit out;
  std::vector<std::pair<std::int32_t, TrainingWindow>> jobs;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (static_cast<int>(i) < opts.window_days) {
      out.skipped_dates.push_back(dates[i]);
      continue;
    }
    TrainingWindow w;
    for (std::size_t j = i - opts.window_days; j < i; ++j)
      for (const TrainingCase* tc : by_date[dates[j]]) w.cases.push_back(*tc);
    jobs.emplace_back(dates[i], std::move(w));
  }

  if (opts.parallel && !opts.warm_start && jobs.size() > 1) {
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(jobs.size())));
    std::vector<FitResult> results(jobs.size());
    std::vector<std::future<void>> workers;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < n_threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&]() {
        for (std::size_t j = next.fetch_add(1); j < jobs.size();
             j = next.fetch_add(1)) {
          results[j] = fit_emos(family, jobs[j].second, opts.objective,
                                std::nullopt, opts.optim);
        }
      }));
    }
    for (auto& w : workers) w.get();
    for (std::size_t j = 0; j < jobs.size(); ++j)
      out.by_date.emplace(jobs[j].first, std::move(results[j]));
    return out;
  }

  std::optional<EmosCoefficients> warm;
  for (auto& [date, window] : jobs) {
    FitResult fr =
        family == Family::tn_ln_mixture && !warm
            ? fit_tnln_mixture(window, warm, opts.optim)
            : fit_emos(family, window, opts.objective, warm, opts.optim);
    if (opts.warm_start) warm = fr.coefficients;
    out.by_date.emplace(date, std::move(fr));
  }
  return out;
}

}  // namespace emospool

#endif  // EMOSPOOL_EMOS_HPP
