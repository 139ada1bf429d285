#ifndef EMOSPOOL_COMBINATION_HPP
#define EMOSPOOL_COMBINATION_HPP

// Two-step combination of fitted component predictive CDFs: linear pool,
// spread-adjusted linear pool, beta-transformed linear pool, and a finite
// beta mixture, plus the closed-form plug-in LP weight.  Fitting minimizes
// the mean numeric CRPS over a training window whose cases each carry the
// component laws they were issued under.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "emospool/distributions.hpp"
#include "emospool/errors.hpp"
#include "emospool/optim.hpp"
#include "emospool/scoring.hpp"

namespace emospool {

enum class Method { lp, lp_pi, slp, blp, bml };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::lp: return "lp";
    case Method::lp_pi: return "lp-pi";
    case Method::slp: return "slp";
    case Method::blp: return "blp";
    case Method::bml: return "bml";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "lp") return Method::lp;
  if (s == "lp-pi" || s == "lp_pi") return Method::lp_pi;
  if (s == "slp") return Method::slp;
  if (s == "blp") return Method::blp;
  if (s == "bml") return Method::bml;
  throw DataError("unknown combination method: " + std::string(s));
}

struct BetaComponent {
  double weight = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
};

struct CombinationParams {
  Method method = Method::lp;
  double omega = 0.5;                   // weight on the G component
  double c = 1.0;                       // SLP spread adjustment
  double alpha = 1.0;                   // BLP
  double beta = 1.0;                    // BLP
  std::vector<BetaComponent> mixture;   // BM_L
  bool degenerate = false;              // plug-in: identical components
  bool non_identified = false;          // multi plug-in: duplicate components
};

namespace detail {

inline double beta_transform(double alpha, double beta, double u) {
  return boost::math::ibeta(alpha, beta, std::clamp(u, 0.0, 1.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pool CDFs over arbitrary component CDF callables

template <class GFn, class HFn>
double lp_cdf(const GFn& g, const HFn& h, double omega, double x) {
  detail::require(omega >= 0.0 && omega <= 1.0,
                  "lp_cdf: weight outside [0,1]");
  return omega * g(x) + (1.0 - omega) * h(x);
}

template <class GFn, class HFn>
double slp_cdf(const GFn& g, const HFn& h, double omega, double c, double x) {
  detail::require(c > 0.0, "slp_cdf: spread adjustment must be positive");
  return lp_cdf(g, h, omega, x / c);
}

template <class GFn, class HFn>
double blp_cdf(const GFn& g, const HFn& h, double omega, double alpha,
               double beta, double x) {
  detail::require(alpha > 0.0 && beta > 0.0,
                  "blp_cdf: beta parameters must be positive");
  return detail::beta_transform(alpha, beta, lp_cdf(g, h, omega, x));
}

template <class GFn, class HFn>
double bml_cdf(const GFn& g, const HFn& h, double omega,
               const std::vector<BetaComponent>& mixture, double x) {
  detail::require(!mixture.empty(), "bml_cdf: empty beta mixture");
  double wsum = 0.0;
  for (const auto& bc : mixture) {
    detail::require(bc.weight >= 0.0, "bml_cdf: negative mixture weight");
    detail::require(bc.alpha > 0.0 && bc.beta > 0.0,
                    "bml_cdf: beta parameters must be positive");
    wsum += bc.weight;
  }
  detail::require(std::fabs(wsum - 1.0) <= 1e-6,
                  "bml_cdf: mixture weights must sum to one");
  const double u = lp_cdf(g, h, omega, x);
  double acc = 0.0;
  for (const auto& bc : mixture)
    acc += bc.weight * detail::beta_transform(bc.alpha, bc.beta, u);
  return acc;
}

// ---------------------------------------------------------------------------
// Pool over parametric components

struct PooledCdf {
  DistributionSpec g;
  DistributionSpec h;
  CombinationParams params;

  PooledCdf(DistributionSpec g_, DistributionSpec h_, CombinationParams p_)
      : g(std::move(g_)), h(std::move(h_)), params(std::move(p_)) {}
};

inline double cdf(const PooledCdf& p, double x) {
  const auto gfn = [&](double t) { return cdf(p.g, t); };
  const auto hfn = [&](double t) { return cdf(p.h, t); };
  switch (p.params.method) {
    case Method::lp:
    case Method::lp_pi:
      return lp_cdf(gfn, hfn, p.params.omega, x);
    case Method::slp:
      return slp_cdf(gfn, hfn, p.params.omega, p.params.c, x);
    case Method::blp:
      return blp_cdf(gfn, hfn, p.params.omega, p.params.alpha, p.params.beta,
                     x);
    case Method::bml:
      return bml_cdf(gfn, hfn, p.params.omega, p.params.mixture, x);
  }
  throw DomainError("cdf(PooledCdf): unknown method");
}

// Pool mass at zero, obtained directly from the component values at zero.
inline double point_mass_at_zero(const PooledCdf& p) { return cdf(p, 0.0); }

// Quadrature grid sized for the pool: component supports joined, stretched
// by c for the SLP.  Beta transforms with beta < 1 fatten the upper tail;
// extend the grid manually for extreme shapes.
inline IntegrationGrid pool_grid(const PooledCdf& p, int n_points = 20001) {
  IntegrationGrid g = default_grid(p.g, p.h, n_points);
  if (p.params.method == Method::slp)
    g.upper = std::ceil(g.upper * std::max(1.0, p.params.c));
  return g;
}

namespace detail {

// Cross term int (G - 1{t>=x}) (H - 1{t>=x}) dt on the same split-trapezoid
// nodes as crps_numeric, so that LP expansions and direct pool quadrature
// agree to the components' quadrature error.
template <class GFn, class HFn>
double lp_cross_numeric(const GFn& g, const HFn& h, double x,
                        const IntegrationGrid& grid) {
  require(grid.n_points >= 2, "lp_cross_numeric: grid needs >= 2 points");
  require(grid.lower < grid.upper,
          "lp_cross_numeric: grid lower must lie below upper");
  require(x >= grid.lower && x <= grid.upper,
          "lp_cross_numeric: observation outside integration grid");
  const double width = grid.upper - grid.lower;
  const double frac = (x - grid.lower) / width;
  double total = 0.0;
  if (x > grid.lower) {
    const int n1 = std::max(
        2, static_cast<int>(std::lround(frac * (grid.n_points - 1))) + 1);
    total += trapezoid([&](double t) { return g(t) * h(t); }, grid.lower, x,
                       n1);
  }
  if (x < grid.upper) {
    const int n2 = std::max(
        2,
        static_cast<int>(std::lround((1.0 - frac) * (grid.n_points - 1))) + 1);
    total += trapezoid(
        [&](double t) { return (1.0 - g(t)) * (1.0 - h(t)); }, x, grid.upper,
        n2);
  }
  return total;
}

}  // namespace detail

// CRPS of a pooled forecast.  LP and LP-PI use the exact quadratic expansion
// (closed-form component CRPS plus a quadrature cross term); the other
// methods integrate the pooled CDF numerically.
inline ScoreValue pooled_crps(const PooledCdf& p, double x,
                              const IntegrationGrid& grid) {
  detail::require(std::isfinite(x), "pooled_crps: observation must be finite");
  if (x < 0.0) return {pooled_crps(p, 0.0, grid).value - x, ScoreKind::crps};

  IntegrationGrid gr = grid;
  gr.upper = std::max(gr.upper, x);
  const auto gfn = [&](double t) { return cdf(p.g, t); };
  const auto hfn = [&](double t) { return cdf(p.h, t); };
  switch (p.params.method) {
    case Method::lp:
    case Method::lp_pi: {
      const double w = p.params.omega;
      detail::require(w >= 0.0 && w <= 1.0, "pooled_crps: weight outside [0,1]");
      const double a = crps_closed(p.g, x).value;
      const double b = crps_closed(p.h, x).value;
      const double m = detail::lp_cross_numeric(gfn, hfn, x, gr);
      return {w * w * a + (1.0 - w) * (1.0 - w) * b + 2.0 * w * (1.0 - w) * m,
              ScoreKind::crps};
    }
    case Method::slp: {
      IntegrationGrid stretched = gr;
      stretched.upper =
          std::max(gr.upper * std::max(1.0, p.params.c), x);
      return crps_numeric(
          [&](double t) {
            return slp_cdf(gfn, hfn, p.params.omega, p.params.c, t);
          },
          x, stretched);
    }
    case Method::blp:
      return crps_numeric(
          [&](double t) {
            return blp_cdf(gfn, hfn, p.params.omega, p.params.alpha,
                           p.params.beta, t);
          },
          x, gr);
    case Method::bml:
      return crps_numeric(
          [&](double t) {
            return bml_cdf(gfn, hfn, p.params.omega, p.params.mixture, t);
          },
          x, gr);
  }
  throw DomainError("pooled_crps: unknown method");
}

inline ScoreValue pooled_crps(const PooledCdf& p, double x) {
  return pooled_crps(p, x, pool_grid(p));
}

// ---------------------------------------------------------------------------
// Training cases and the shared uniform quadrature used for fitting

// One training case for combination fitting: the component laws the case was
// issued under (per-day coefficients for fit_combination, the current day's
// coefficients for plugin_weight) and the verifying observation.
struct CombinationCase {
  DistributionSpec g;
  DistributionSpec h;
  double obs;
};

struct CombinationFitOptions {
  int grid_points = 2001;       // uniform quadrature grid over [0, upper]
  double grid_upper = 0.0;      // <= 0: derived from the component supports
  int beta_table_points = 513;  // beta-transform lookup inside the optimizer
  OptimOptions optim;
};

namespace detail {

// Bilinear quadrature of int (A - 1{t>=s}) (B - 1{t>=s}) dt for CDF samples
// A, B on the uniform grid t_k = k*step.  Each cell integrates the product
// of the linear interpolants exactly, and the cell containing s is split
// analytically, so the result is smooth in s and exactly bilinear in (A, B).
// Mass below t=0 is zero; above the grid the samples are held constant.
struct UniformGridQuad {
  double step;

  // integral over one cell of (p0 + dp*u/step)(q0 + dq*u/step) du, u in [0,w]
  double cell(double p0, double dp, double q0, double dq, double w) const {
    return w * (p0 * q0 + (p0 * dq + q0 * dp) * w / (2.0 * step) +
                dp * dq * w * w / (3.0 * step * step));
  }

  double cross(const double* a, const double* b, std::size_t n,
               double s) const {
    const double upper = step * static_cast<double>(n - 1);
    double acc = 0.0;
    if (s <= 0.0) {
      for (std::size_t k = 0; k + 1 < n; ++k)
        acc += cell(a[k] - 1.0, a[k + 1] - a[k], b[k] - 1.0, b[k + 1] - b[k],
                    step);
      return acc - s;  // below zero both CDFs vanish: integrand is 1
    }
    if (s >= upper) {
      for (std::size_t k = 0; k + 1 < n; ++k)
        acc += cell(a[k], a[k + 1] - a[k], b[k], b[k + 1] - b[k], step);
      return acc + (s - upper) * a[n - 1] * b[n - 1];
    }
    const auto j = std::min(static_cast<std::size_t>(s / step), n - 2);
    for (std::size_t k = 0; k < j; ++k)
      acc += cell(a[k], a[k + 1] - a[k], b[k], b[k + 1] - b[k], step);
    for (std::size_t k = j + 1; k + 1 < n; ++k)
      acc += cell(a[k] - 1.0, a[k + 1] - a[k], b[k] - 1.0, b[k + 1] - b[k],
                  step);
    const double w = s - step * static_cast<double>(j);
    const double dp = a[j + 1] - a[j];
    const double dq = b[j + 1] - b[j];
    acc += cell(a[j], dp, b[j], dq, w);
    acc += cell(a[j] - 1.0, dp, b[j] - 1.0, dq, step) -
           cell(a[j] - 1.0, dp, b[j] - 1.0, dq, w);
    return acc;
  }

  double crps(const std::vector<double>& f, double s) const {
    return cross(f.data(), f.data(), f.size(), s);
  }
};

struct LpTerms {
  double a = 0.0;  // G self term
  double b = 0.0;  // H self term
  double m = 0.0;  // cross term
};

inline LpTerms lp_terms_uniform(const UniformGridQuad& q,
                                const std::vector<double>& g,
                                const std::vector<double>& h, double s) {
  return {q.cross(g.data(), g.data(), g.size(), s),
          q.cross(h.data(), h.data(), h.size(), s),
          q.cross(g.data(), h.data(), g.size(), s)};
}

struct PoolCacheCase {
  std::vector<double> g;
  std::vector<double> h;
  double obs = 0.0;
  LpTerms at_obs;
};

struct PoolCache {
  UniformGridQuad quad{1.0};
  double upper = 1.0;
  std::size_t n = 0;
  std::vector<PoolCacheCase> cases;
};

inline PoolCache build_pool_cache(const std::vector<CombinationCase>& window,
                                  const CombinationFitOptions& opts) {
  if (window.empty())
    throw DegenerateError("combination fit: empty training window");
  require(opts.grid_points >= 3, "combination fit: grid needs >= 3 points");
  double upper = opts.grid_upper;
  if (upper <= 0.0) {
    for (const auto& cc : window)
      upper = std::max({upper, default_grid(cc.g, cc.h).upper, cc.obs});
  }
  PoolCache cache;
  cache.upper = upper;
  cache.n = static_cast<std::size_t>(opts.grid_points);
  cache.quad.step = upper / static_cast<double>(cache.n - 1);
  cache.cases.reserve(window.size());
  for (const auto& cc : window) {
    PoolCacheCase pc;
    pc.obs = cc.obs;
    pc.g.resize(cache.n);
    pc.h.resize(cache.n);
    for (std::size_t k = 0; k < cache.n; ++k) {
      const double t = cache.quad.step * static_cast<double>(k);
      pc.g[k] = cdf(cc.g, t);
      pc.h[k] = cdf(cc.h, t);
    }
    pc.at_obs = lp_terms_uniform(cache.quad, pc.g, pc.h, pc.obs);
    cache.cases.push_back(std::move(pc));
  }
  return cache;
}

// Piecewise-linear lookup of the regularized incomplete beta function.
// build() is memoized on (alpha, beta, n): finite-difference gradients
// perturb one packed coordinate at a time, so per gradient evaluation at
// most one mixture component's table actually changes.
struct BetaTable {
  double alpha = -1.0;
  double beta = -1.0;
  std::vector<double> v;

  void build(double a, double b, int n) {
    if (a == alpha && b == beta && v.size() == static_cast<std::size_t>(n))
      return;
    alpha = a;
    beta = b;
    v.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      v[static_cast<std::size_t>(i)] = beta_transform(
          alpha, beta, static_cast<double>(i) / static_cast<double>(n - 1));
  }

  double operator()(double u) const {
    const double t =
        std::clamp(u, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const auto j = std::min(static_cast<std::size_t>(t), v.size() - 2);
    const double f = t - static_cast<double>(j);
    return v[j] + f * (v[j + 1] - v[j]);
  }
};

}  // namespace detail

// Component CDFs tabulated on the shared quadrature grid for one training
// window.  Building this is the expensive part of any pool fit and is
// identical across methods, so a rolling pipeline constructs it once per
// day and hands it to each fit_combination / plugin_weight call.
struct CombinationWindow {
  detail::PoolCache cache;
  CombinationFitOptions opts;

  explicit CombinationWindow(const std::vector<CombinationCase>& window,
                             const CombinationFitOptions& o = {})
      : cache(detail::build_pool_cache(window, o)), opts(o) {}
};

// ---------------------------------------------------------------------------
// Plug-in LP weight

// Diagnostics for the closed-form plug-in weight.  Means are numeric-CRPS
// averages over the window under the shared quadrature grid.
struct PluginWeightResult {
  double omega = 0.5;
  double omega_unclamped = 0.5;
  bool degenerate = false;
  double mean_crps_g = 0.0;
  double mean_crps_h = 0.0;
  double mean_cross = 0.0;
  double mean_crps_pool = 0.0;
};

// Closed-form minimizer of the window-mean LP CRPS, clamped to [0,1].  The
// caller supplies every case under the current day's component coefficients;
// the quadratic structure then guarantees the pooled training CRPS cannot
// exceed either component's.
inline PluginWeightResult plugin_weight(const CombinationWindow& prepared) {
  const detail::PoolCache& cache = prepared.cache;
  double abar = 0.0, bbar = 0.0, mbar = 0.0;
  for (const auto& pc : cache.cases) {
    abar += pc.at_obs.a;
    bbar += pc.at_obs.b;
    mbar += pc.at_obs.m;
  }
  const double n = static_cast<double>(cache.cases.size());
  abar /= n;
  bbar /= n;
  mbar /= n;

  PluginWeightResult r;
  r.mean_crps_g = abar;
  r.mean_crps_h = bbar;
  r.mean_cross = mbar;
  // denominator = window mean of int (G - H)^2 >= 0
  const double denom = abar + bbar - 2.0 * mbar;
  if (denom <= 1e-12 * std::max(1.0, abar + bbar)) {
    r.degenerate = true;
    r.omega = 0.5;
    r.omega_unclamped = 0.5;
  } else {
    r.omega_unclamped = (bbar - mbar) / denom;
    r.omega = std::clamp(r.omega_unclamped, 0.0, 1.0);
  }
  const double w = r.omega;
  r.mean_crps_pool = w * w * abar + (1.0 - w) * (1.0 - w) * bbar +
                     2.0 * w * (1.0 - w) * mbar;
  return r;
}

inline PluginWeightResult plugin_weight(
    const std::vector<CombinationCase>& window,
    const CombinationFitOptions& opts = {}) {
  return plugin_weight(CombinationWindow(window, opts));
}

// ---------------------------------------------------------------------------
// Plug-in weights for r >= 2 components

struct MultiCombinationCase {
  std::vector<DistributionSpec> components;
  double obs = 0.0;
};

struct PluginMultiResult {
  std::vector<double> weights;
  double mean_crps = 0.0;
  bool non_identified = false;  // duplicate components were merged
  bool degenerate = false;      // fell back to uniform weights
};

namespace detail {

// Gaussian elimination with partial pivoting; empty result when singular.
inline std::optional<std::vector<double>> solve_linear(
    std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-13) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  return x;
}

}  // namespace detail

// Minimizes the quadratic training-CRPS form w'Qw over the weight simplex,
// where Q holds component mean CRPS values on the diagonal and cross terms
// off it.  Components identical on the window (in the L2 sense) are merged
// before solving and their weight split equally afterwards, flagged
// non-identified.  Solved exactly by KKT systems over all support subsets.
inline PluginMultiResult plugin_weight_multi(
    const std::vector<MultiCombinationCase>& window,
    const CombinationFitOptions& opts = {}) {
  if (window.empty())
    throw DegenerateError("plugin_weight_multi: empty training window");
  const std::size_t r = window.front().components.size();
  detail::require(r >= 2, "plugin_weight_multi: needs at least two components");
  for (const auto& mc : window)
    detail::require(mc.components.size() == r,
                    "plugin_weight_multi: inconsistent component count");
  detail::require(opts.grid_points >= 3,
                  "plugin_weight_multi: grid needs >= 3 points");

  double upper = opts.grid_upper;
  if (upper <= 0.0) {
    for (const auto& mc : window) {
      upper = std::max(upper, mc.obs);
      for (const auto& comp : mc.components)
        upper = std::max(upper, default_grid(comp).upper);
    }
  }
  const auto n = static_cast<std::size_t>(opts.grid_points);
  const detail::UniformGridQuad quad{upper / static_cast<double>(n - 1)};

  // window-mean quadratic form
  std::vector<std::vector<double>> q(r, std::vector<double>(r, 0.0));
  std::vector<std::vector<double>> values(r, std::vector<double>(n));
  for (const auto& mc : window) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < n; ++k)
        values[i][k] =
            cdf(mc.components[i], quad.step * static_cast<double>(k));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = i; j < r; ++j)
        q[i][j] += quad.cross(values[i].data(), values[j].data(), n, mc.obs);
  }
  const double nw = static_cast<double>(window.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j) {
      q[i][j] /= nw;
      q[j][i] = q[i][j];
    }

  // merge L2-identical components
  std::vector<std::size_t> group(r);
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < r; ++i) {
    bool merged = false;
    for (std::size_t gi = 0; gi < reps.size() && !merged; ++gi) {
      const std::size_t j = reps[gi];
      const double dist = q[i][i] + q[j][j] - 2.0 * q[i][j];
      if (dist <= 1e-10 * std::max(1.0, q[i][i] + q[j][j])) {
        group[i] = gi;
        merged = true;
      }
    }
    if (!merged) {
      group[i] = reps.size();
      reps.push_back(i);
    }
  }
  const std::size_t rr = reps.size();

  PluginMultiResult out;
  out.non_identified = rr < r;
  if (rr == 1) {
    out.weights.assign(r, 1.0 / static_cast<double>(r));
    out.mean_crps = q[0][0];
    return out;
  }

  std::vector<double> best_w;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << rr); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t gi = 0; gi < rr; ++gi)
      if (mask & (std::size_t{1} << gi)) idx.push_back(gi);
    std::vector<double> w(rr, 0.0);
    double val;
    if (idx.size() == 1) {
      w[idx[0]] = 1.0;
      val = q[reps[idx[0]]][reps[idx[0]]];
    } else {
      std::vector<std::vector<double>> qs(idx.size(),
                                          std::vector<double>(idx.size()));
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b)
          qs[a][b] = q[reps[idx[a]]][reps[idx[b]]];
      const auto z = detail::solve_linear(qs, std::vector<double>(idx.size(), 1.0));
      if (!z) continue;
      double zsum = 0.0;
      for (double zi : *z) zsum += zi;
      if (zsum <= 0.0) continue;
      bool feasible = true;
      for (double zi : *z)
        if (zi / zsum < -1e-12) feasible = false;
      if (!feasible) continue;
      for (std::size_t a = 0; a < idx.size(); ++a)
        w[idx[a]] = std::max(0.0, (*z)[a] / zsum);
      val = 1.0 / zsum;  // w'Qw at the KKT point
    }
    if (val < best_val) {
      best_val = val;
      best_w = std::move(w);
    }
  }

  if (best_w.empty()) {
    out.degenerate = true;
    out.weights.assign(r, 1.0 / static_cast<double>(r));
    double acc = 0.0;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        acc += out.weights[i] * out.weights[j] * q[i][j];
    out.mean_crps = acc;
    return out;
  }

  // split merged weight equally among duplicates, renormalize exactly
  std::vector<std::size_t> gsize(rr, 0);
  for (std::size_t i = 0; i < r; ++i) ++gsize[group[i]];
  out.weights.assign(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    out.weights[i] = best_w[group[i]] / static_cast<double>(gsize[group[i]]);
  double wsum = 0.0;
  for (double w : out.weights) wsum += w;
  for (double& w : out.weights) w /= wsum;
  double resid = 1.0;
  std::size_t imax = 0;
  for (std::size_t i = 0; i < r; ++i) {
    if (out.weights[i] > out.weights[imax]) imax = i;
    resid -= out.weights[i];
  }
  out.weights[imax] += resid;
  out.mean_crps = best_val;
  return out;
}

// ---------------------------------------------------------------------------
// Combination fitting

struct CombinationFit {
  CombinationParams params;
  bool converged = false;
  int iterations = 0;
  int n_cases = 0;
  double objective = 0.0;          // window-mean numeric CRPS at the solution
  double objective_at_init = 0.0;
};

namespace detail {

inline std::vector<double> pack_combination(const CombinationParams& p) {
  // a boundary omega init would pack to an infinite logit
  std::vector<double> u{logit(std::clamp(p.omega, 1e-8, 1.0 - 1e-8))};
  switch (p.method) {
    case Method::slp:
      u.push_back(std::log(p.c));
      break;
    case Method::blp:
      u.push_back(std::log(p.alpha));
      u.push_back(std::log(p.beta));
      break;
    case Method::bml: {
      for (std::size_t l = 1; l < p.mixture.size(); ++l)
        u.push_back(std::log(std::max(p.mixture[l].weight, 1e-12) /
                             std::max(p.mixture[0].weight, 1e-12)));
      for (const auto& bc : p.mixture) u.push_back(std::log(bc.alpha));
      for (const auto& bc : p.mixture) u.push_back(std::log(bc.beta));
      break;
    }
    default:
      break;
  }
  return u;
}

inline CombinationParams unpack_combination(Method method, std::size_t L,
                                            const std::vector<double>& u) {
  CombinationParams p;
  p.method = method;
  p.omega = logistic(u[0]);
  switch (method) {
    case Method::slp:
      p.c = clamp_exp(u[1]);
      break;
    case Method::blp:
      p.alpha = clamp_exp(u[1]);
      p.beta = clamp_exp(u[2]);
      break;
    case Method::bml: {
      p.mixture.resize(L);
      double wsum = 1.0;
      std::vector<double> ew(L, 1.0);
      for (std::size_t l = 1; l < L; ++l) {
        ew[l] = clamp_exp(u[l]);  // weight relative to component 0
        wsum += ew[l];
      }
      for (std::size_t l = 0; l < L; ++l) {
        p.mixture[l].weight = ew[l] / wsum;
        p.mixture[l].alpha = clamp_exp(u[L + l]);
        p.mixture[l].beta = clamp_exp(u[2 * L + l]);
      }
      break;
    }
    default:
      break;
  }
  return p;
}

inline double combination_objective(const PoolCache& cache,
                                    const CombinationParams& p,
                                    int table_points,
                                    std::vector<BetaTable>& tables,
                                    std::vector<double>& scratch) {
  const double w = p.omega;
  double acc = 0.0;
  switch (p.method) {
    case Method::lp:
    case Method::lp_pi: {
      for (const auto& pc : cache.cases) {
        const LpTerms& t = pc.at_obs;
        acc += w * w * t.a + (1.0 - w) * (1.0 - w) * t.b +
               2.0 * w * (1.0 - w) * t.m;
      }
      break;
    }
    case Method::slp: {
      for (const auto& pc : cache.cases) {
        const LpTerms t =
            lp_terms_uniform(cache.quad, pc.g, pc.h, pc.obs / p.c);
        acc += p.c * (w * w * t.a + (1.0 - w) * (1.0 - w) * t.b +
                      2.0 * w * (1.0 - w) * t.m);
      }
      break;
    }
    case Method::blp:
    case Method::bml: {
      const std::size_t L = p.method == Method::blp ? 1 : p.mixture.size();
      tables.resize(L);
      if (p.method == Method::blp) {
        tables[0].build(p.alpha, p.beta, table_points);
      } else {
        for (std::size_t l = 0; l < L; ++l)
          tables[l].build(p.mixture[l].alpha, p.mixture[l].beta, table_points);
      }
      scratch.resize(cache.n);
      for (const auto& pc : cache.cases) {
        for (std::size_t k = 0; k < cache.n; ++k) {
          const double u = w * pc.g[k] + (1.0 - w) * pc.h[k];
          if (p.method == Method::blp) {
            scratch[k] = tables[0](u);
          } else {
            double f = 0.0;
            for (std::size_t l = 0; l < L; ++l)
              f += p.mixture[l].weight * tables[l](u);
            scratch[k] = f;
          }
        }
        acc += cache.quad.crps(scratch, pc.obs);
      }
      break;
    }
  }
  return acc / static_cast<double>(cache.cases.size());
}

inline CombinationParams combination_init(Method method, int L) {
  CombinationParams p;
  p.method = method;
  p.omega = 0.5;
  if (method == Method::bml) {
    p.mixture.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      auto& bc = p.mixture[static_cast<std::size_t>(l)];
      bc.weight = 1.0 / static_cast<double>(L);
      const double e = static_cast<double>(l) -
                       0.5 * static_cast<double>(L - 1);
      bc.alpha = std::pow(2.0, e);
      bc.beta = bc.alpha;
    }
  }
  return p;
}

}  // namespace detail

// Fits pool parameters by minimizing the window-mean numeric CRPS with BFGS
// on an unconstrained reparametrization (logit weight, log scale and beta
// parameters, relative-log mixture weights).  The beta transform runs
// through a lookup table inside the optimizer; reported objectives use the
// same quadrature, so the init-vs-final monotonicity is exact.  LP-PI is not
// an optimization problem and delegates to plugin_weight.
inline CombinationFit fit_combination(
    Method method, const CombinationWindow& prepared,
    int n_beta_components = 3,
    std::optional<CombinationParams> init = std::nullopt) {
  const detail::PoolCache& cache = prepared.cache;
  if (method == Method::lp_pi) {
    const PluginWeightResult pw = plugin_weight(prepared);
    CombinationFit fit;
    fit.params.method = Method::lp_pi;
    fit.params.omega = pw.omega;
    fit.params.degenerate = pw.degenerate;
    fit.converged = true;
    fit.n_cases = static_cast<int>(cache.cases.size());
    fit.objective = pw.mean_crps_pool;
    fit.objective_at_init = pw.mean_crps_pool;
    return fit;
  }

  detail::require(n_beta_components >= 1,
                  "fit_combination: need at least one beta component");

  CombinationParams start =
      init ? *init : detail::combination_init(method, n_beta_components);
  detail::require(start.method == method,
                  "fit_combination: init params are for a different method");
  const std::size_t L =
      method == Method::bml ? start.mixture.size() : std::size_t{1};
  detail::require(method != Method::bml || L >= 1,
                  "fit_combination: BM_L init needs a nonempty mixture");

  std::vector<detail::BetaTable> tables;
  std::vector<double> scratch;
  const auto obj_fn = [&](const std::vector<double>& u) {
    return detail::combination_objective(
        cache, detail::unpack_combination(method, L, u),
        prepared.opts.beta_table_points, tables, scratch);
  };
  const std::vector<double> u0 = detail::pack_combination(start);
  const OptimResult opt = minimize(obj_fn, u0, prepared.opts.optim);

  CombinationFit fit;
  fit.params = detail::unpack_combination(method, L, opt.x);
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.n_cases = static_cast<int>(cache.cases.size());
  fit.objective = opt.f;
  fit.objective_at_init = obj_fn(u0);
  if (fit.objective_at_init < fit.objective) {
    fit.params = start;
    fit.objective = fit.objective_at_init;
  }
  return fit;
}

inline CombinationFit fit_combination(
    Method method, const std::vector<CombinationCase>& window,
    int n_beta_components = 3,
    std::optional<CombinationParams> init = std::nullopt,
    const CombinationFitOptions& opts = {}) {
  return fit_combination(method, CombinationWindow(window, opts),
                         n_beta_components, init);
}

}  // namespace emospool

#endif  // EMOSPOOL_COMBINATION_HPP
