#ifndef EMOSPOOL_OPTIM_HPP
#define EMOSPOOL_OPTIM_HPP

// Quasi-Newton minimizer used by every fitting routine.  BFGS on the inverse
// Hessian with forward-difference gradients and Armijo backtracking; bounds
// are handled upstream by smooth reparametrizations (exp, softplus, logistic),
// so the optimizer itself is unconstrained.  Deterministic: same objective,
// start point and settings give the same iterates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace emospool {

struct OptimOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;   // stop on max |g_i|
  double step_tolerance = 1e-11;      // stop on max |dx_i|
  double fd_step = 1e-7;              // relative forward-difference step
  int max_backtracks = 40;
};

struct OptimResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
};

namespace detail {

// Forward differences against the already-known f(x); falls back to a
// backward step when f(x+h) lands in a non-finite region.
class NumericGradient {
 public:
  NumericGradient(const std::function<double(const std::vector<double>&)>& f,
                  double rel_step, int& eval_counter)
      : f_(f), rel_step_(rel_step), evals_(eval_counter) {}

  std::vector<double> operator()(std::vector<double> x, double fx) const {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      const double h = rel_step_ * std::max(1.0, std::fabs(xi));
      x[i] = xi + h;
      double fp = f_(x);
      ++evals_;
      if (std::isfinite(fp)) {
        g[i] = (fp - fx) / h;
      } else {
        x[i] = xi - h;
        fp = f_(x);
        ++evals_;
        g[i] = (fx - fp) / h;
      }
      x[i] = xi;
    }
    return g;
  }

 private:
  const std::function<double(const std::vector<double>&)>& f_;
  double rel_step_;
  int& evals_;
};

}  // namespace detail

inline OptimResult minimize(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, const OptimOptions& opt = {}) {
  const std::size_t n = x0.size();
  OptimResult res;
  res.x = x0;
  res.f = f(x0);
  res.evaluations = 1;
  if (n == 0) {
    res.converged = true;
    return res;
  }

  detail::NumericGradient grad(f, opt.fd_step, res.evaluations);

  // Inverse Hessian approximation, started at identity.
  std::vector<double> hinv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;

  std::vector<double> x = x0;
  double fx = res.f;
  std::vector<double> g = grad(x, fx);

  auto max_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::fabs(a));
    return m;
  };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter + 1;
    if (max_abs(g) < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Search direction d = -Hinv g.
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= hinv[i * n + j] * g[j];
      d[i] = acc;
    }
    double dir_deriv = 0.0;
    for (std::size_t i = 0; i < n; ++i) dir_deriv += d[i] * g[i];
    if (!(dir_deriv < 0.0)) {
      // Not a descent direction (stale curvature); restart from steepest
      // descent.
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) hinv[i * n + j] = (i == j);
        d[i] = -g[i];
      }
      dir_deriv = 0.0;
      for (std::size_t i = 0; i < n; ++i) dir_deriv += d[i] * g[i];
      if (!(dir_deriv < 0.0)) break;  // zero gradient; handled above next loop
    }

    // Armijo backtracking.  A cliff in the objective (e.g. a penalty region
    // next to the start point) can make dir_deriv so large that the Armijo
    // threshold rejects every candidate even when some improve f by orders
    // of magnitude, so the best strictly-improving probe is kept as a
    // fallback step.
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    std::vector<double> x_new(n);
    std::vector<double> x_probe(n);
    double f_probe = std::numeric_limits<double>::infinity();
    bool accepted = false;
    bool rescued = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new)) {
        if (f_new <= fx + 1e-4 * step * dir_deriv) {
          accepted = true;
          break;
        }
        if (f_new < f_probe) {
          f_probe = f_new;
          x_probe = x_new;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (f_probe < fx) {
        x_new = x_probe;
        f_new = f_probe;
        rescued = true;
      } else {
        break;  // no progress possible along this direction
      }
    }

    std::vector<double> g_new = grad(x_new, f_new);
    std::vector<double> s(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      yv[i] = g_new[i] - g[i];
    }
    double sy = 0.0;
    double ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sy += s[i] * yv[i];
      ss += s[i] * s[i];
      yy += yv[i] * yv[i];
    }

    const double step_size = std::sqrt(ss);
    x = x_new;
    fx = f_new;
    g = g_new;
    if (fx < res.f) {
      res.f = fx;
      res.x = x;
    }

    if (step_size < opt.step_tolerance) {
      res.converged = true;
      break;
    }

    // A rescue step crossed a region where the quadratic model is useless;
    // drop the accumulated curvature instead of updating it.
    if (rescued) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hinv[i * n + j] = (i == j);
      continue;
    }

    // BFGS update of Hinv; skipped when curvature is too weak to be trusted.
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      const double rho = 1.0 / sy;
      // Hinv <- (I - rho s y^T) Hinv (I - rho y s^T) + rho s s^T
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * yv[j];
        hy[i] = acc;
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += yv[i] * hy[i];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] -
                                    hy[i] * s[j] - s[i] * hy[j]);
        }
      }
    }
  }

  if (max_abs(g) < opt.gradient_tolerance) res.converged = true;
  return res;
}

// Smooth positivity map used for coefficients constrained to [0, inf); its
// inverse is clamped so callers can pack arbitrary nonnegative starts.
inline double softplus(double u) {
  if (u > 30.0) return u;
  return std::log1p(std::exp(u));
}

inline double softplus_inv(double v) {
  const double w = std::max(v, 1e-12);
  if (w > 30.0) return w;
  return std::log(std::expm1(w));
}

// exp with the argument capped so packed parameters can never overflow
// Clamped on both sides: the floor keeps a wild line-search probe from
// underflowing a positive parameter to an exact zero.
inline double clamp_exp(double u) {
  return std::exp(std::clamp(u, -40.0, 40.0));
}

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline double logit(double p) {
  const double q = std::min(1.0 - 1e-9, std::max(1e-9, p));
  return std::log(q / (1.0 - q));
}

}  // namespace emospool

#endif  // EMOSPOOL_OPTIM_HPP
