#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "emospool/distributions.hpp"
#include "support/quad.hpp"

using namespace emospool;

namespace {

// Quantile of an uncensored GEV written out from the definition, keyed by
// w = -log(1 - p) so that p close to 1 stays representable.
double gev_quantile_by_w(double w, double mu, double sigma, double xi) {
  const double lw = -std::log1p(-std::exp(-w));  // = -log p, exact for large w
  if (xi == 0.0) return mu - sigma * std::log(lw);
  return mu + sigma * (std::pow(lw, -xi) - 1.0) / xi;
}

// E X of a GEV by integrating the quantile function: with p = 1 - e^{-w},
// E X = int_0^inf Q(p(w)) e^{-w} dw.  Direct tail quadrature of 1 - H cannot
// reach 1e-6 for xi near 1, this substitution decays like e^{(xi-1)w}.
double gev_mean_by_quadrature(double mu, double sigma, double xi,
                              bool censored) {
  const auto f = [=](double w) {
    double q = gev_quantile_by_w(w, mu, sigma, xi);
    if (censored) q = std::max(q, 0.0);
    return q * std::exp(-w);
  };
  // piecewise so the quadrature probes cannot all land in the flat far tail
  double acc = 0.0, lo = 1e-14;
  for (const double hi : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0,
                          300.0}) {
    acc += testsupport::integrate(f, lo, hi, 1e-10);
    lo = hi;
  }
  return acc;
}

double lognormal_raw_moment(double mu, double sigma, int k) {
  // E X^k = int exp(k(mu + sigma u)) phi(u) du over the whole line.
  return testsupport::integrate(
      [=](double u) {
        return std::exp(k * (mu + sigma * u)) * inv_sqrt_2pi *
               std::exp(-0.5 * u * u);
      },
      -12.5, 12.5, 1e-13);
}

}  // namespace

TEST_CASE("known cdf, pdf and quantile values") {
  const TruncatedNormal tn(0.0, 1.0);
  CHECK(cdf(tn, 0.0) == 0.0);
  CHECK(cdf(tn, -0.5) == 0.0);
  CHECK_THAT(pdf(tn, 0.0),
             Catch::Matchers::WithinAbs(2.0 * inv_sqrt_2pi, 1e-14));
  CHECK_THAT(cdf(tn, 1.0),
             Catch::Matchers::WithinAbs(0.6826894921370859, 1e-12));

  const LogNormal ln(0.0, 1.0);
  CHECK_THAT(cdf(ln, 1.0), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK_THAT(pdf(ln, 1.0), Catch::Matchers::WithinAbs(inv_sqrt_2pi, 1e-14));
  CHECK_THAT(quantile(ln, 0.5), Catch::Matchers::WithinAbs(1.0, 1e-12));

  // Exponential special case: point mass G(ln 2) = 1 - e^{-ln 2} = 1/2.
  const CensoredShiftedGamma csg(1.0, 1.0, std::log(2.0));
  CHECK_THAT(cdf(csg, 0.0), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK_THAT(point_mass_at_zero(csg), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK(quantile(csg, 0.25) == 0.0);
  CHECK_THAT(pdf(csg, 0.0), Catch::Matchers::WithinAbs(0.5, 1e-14));

  const CensoredGev cgev(0.0, 1.0, 0.0);
  CHECK_THAT(cdf(cgev, 0.0),
             Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-14));
  CHECK(point_mass_at_zero(cgev) == cdf(cgev, 0.0));

  const Beta be(2.0, 2.0);
  CHECK_THAT(cdf(be, 0.5), Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK_THAT(pdf(be, 0.5), Catch::Matchers::WithinAbs(1.5, 1e-12));
  CHECK(cdf(Beta(1.0, 1.0), 0.37) == Catch::Approx(0.37));  // identity law
}

TEST_CASE("cdf is nondecreasing with the right limits") {
  const std::vector<DistributionSpec> laws = {
      TruncatedNormal(1.2, 0.8),  TruncatedNormal(-0.5, 1.5),
      LogNormal(0.3, 0.7),        CensoredShiftedGamma(2.5, 1.3,  0.4),
      CensoredGev(0.6, 0.9, 0.2), CensoredGev(0.6, 0.9, -0.15),
      Beta(0.7, 2.2)};
  for (const auto& d : laws) {
    const double hi = quantile(d, 1.0 - 1e-7);
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = hi * i / 1000.0;
      const double v = cdf(d, x);
      CHECK(v >= prev);
      CHECK(v <= 1.0);
      prev = v;
    }
    CHECK(cdf(d, -1.0) == 0.0);
    CHECK(cdf(d, hi) >= 1.0 - 2e-7);
    CHECK(prev <= 1.0);
  }
}

TEST_CASE("continuous density integrates to one minus the atom") {
  const std::vector<DistributionSpec> laws = {
      TruncatedNormal(0.8, 1.1),  LogNormal(-0.2, 0.9),
      CensoredShiftedGamma(1.7, 0.8, 0.5), CensoredGev(0.4, 1.0, 0.15),
      CensoredGev(0.4, 1.0, -0.1), Beta(0.6, 1.8)};
  for (const auto& d : laws) {
    const double hi = quantile(d, 1.0 - 1e-9);
    // start just above zero so censored families contribute their continuous
    // part only; the atom is accounted for separately
    const double cont = testsupport::integrate(
        [&](double x) { return pdf(d, x); }, 1e-12, hi, 1e-10);
    const double expect = 1.0 - point_mass_at_zero(d) - 1e-9;
    CHECK_THAT(cont, Catch::Matchers::WithinAbs(expect, 1e-6));
    // and the same integral must agree with the cdf difference exactly
    const double mid = quantile(d, 0.7);
    const double seg = testsupport::integrate(
        [&](double x) { return pdf(d, x); }, 1e-12, mid, 1e-11);
    CHECK_THAT(seg, Catch::Matchers::WithinAbs(
                        cdf(d, mid) - cdf(d, 1e-12), 1e-8));
  }
}

TEST_CASE("quantile inverts the cdf on the continuous support") {
  const std::vector<DistributionSpec> laws = {
      TruncatedNormal(5.0, 1.0),  TruncatedNormal(-1.0, 2.0),
      LogNormal(0.1, 1.2),        CensoredShiftedGamma(2.0, 1.0, 0.3),
      CensoredGev(1.0, 0.7, 0.25), CensoredGev(1.0, 0.7, -0.2),
      Beta(3.0, 1.4)};
  for (const auto& d : laws) {
    const double atom = point_mass_at_zero(d);
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      const double x = quantile(d, p);
      if (p <= atom) {
        CHECK(x == 0.0);
        continue;
      }
      CHECK_THAT(cdf(d, x), Catch::Matchers::WithinAbs(p, 1e-10));
      CHECK_THAT(quantile(d, cdf(d, x)),
                 Catch::Matchers::WithinRel(x, 1e-8));
    }
  }

  // independent bisection route for the spec'd TN case
  const TruncatedNormal tn(5.0, 1.0);
  for (int i = 1; i <= 99; ++i) {
    const double p = i / 100.0;
    const double viaBisect = testsupport::quantile_bisect(
        [&](double x) { return cdf(tn, x); }, p, 0.0, 30.0);
    CHECK_THAT(quantile(tn, p),
               Catch::Matchers::WithinAbs(viaBisect, 1e-9));
  }
}

TEST_CASE("means against quadrature") {
  CHECK_THAT(mean(TruncatedNormal(1.3, 0.9)),
             Catch::Matchers::WithinAbs(
                 testsupport::mean_oracle(
                     [&](double x) { return cdf(TruncatedNormal(1.3, 0.9), x); },
                     1.0),
                 1e-9));
  CHECK_THAT(mean(LogNormal(0.2, 0.8)),
             Catch::Matchers::WithinAbs(
                 testsupport::mean_oracle(
                     [&](double x) { return cdf(LogNormal(0.2, 0.8), x); },
                     1.5),
                 1e-8));
  const CensoredShiftedGamma csg(1.8, 1.1, 0.6);
  CHECK_THAT(mean(csg),
             Catch::Matchers::WithinAbs(
                 testsupport::mean_oracle(
                     [&](double x) { return cdf(csg, x); }, 2.0),
                 1e-9));
  CHECK_THAT(mean(Beta(2.5, 4.0)),
             Catch::Matchers::WithinAbs(2.5 / 6.5, 1e-14));

  for (const double xi : {-0.2, -0.05, 0.0, 0.1, 0.45, 0.8}) {
    const CensoredGev g(0.5, 1.2, xi);
    CHECK_THAT(mean(g), Catch::Matchers::WithinAbs(
                            gev_mean_by_quadrature(0.5, 1.2, xi, true), 1e-6));
  }
}

TEST_CASE("moments_to_lognormal recovers the requested moments") {
  const double e = std::exp(1.0);
  const LogNormal unit = moments_to_lognormal(std::sqrt(e), (e - 1.0) * e);
  CHECK_THAT(unit.mu, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(unit.sigma, Catch::Matchers::WithinAbs(1.0, 1e-12));

  std::mt19937_64 rng(411);
  std::uniform_real_distribution<double> um(0.8, 2.5), uv(0.2, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double m = um(rng), v = uv(rng);
    const LogNormal d = moments_to_lognormal(m, v);
    const double m1 = lognormal_raw_moment(d.mu, d.sigma, 1);
    const double m2 = lognormal_raw_moment(d.mu, d.sigma, 2);
    CHECK_THAT(m1, Catch::Matchers::WithinAbs(m, 1e-8));
    CHECK_THAT(m2 - m1 * m1, Catch::Matchers::WithinAbs(v, 1e-8));
  }
}

TEST_CASE("moments_to_gamma is the exact inverse") {
  const auto [k2, t2] = moments_to_gamma(2.0, 2.0);
  CHECK(k2 == Catch::Approx(2.0));
  CHECK(t2 == Catch::Approx(1.0));
  const auto [k1, t1] = moments_to_gamma(1.0, 1.0);
  CHECK(k1 == 1.0);
  CHECK(t1 == 1.0);

  std::mt19937_64 rng(7781);
  std::uniform_real_distribution<double> u(0.05, 8.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double m = u(rng), v = u(rng);
    const auto [k, t] = moments_to_gamma(m, v);
    CHECK_THAT(k * t, Catch::Matchers::WithinRel(m, 1e-12));
    CHECK_THAT(k * t * t, Catch::Matchers::WithinRel(v, 1e-12));
  }
}

TEST_CASE("gev_location_from_mean") {
  CHECK_THAT(gev_location_from_mean(euler_mascheroni, 1.0, 0.0),
             Catch::Matchers::WithinAbs(0.0, 1e-12));

  // continuity across the Gumbel switch
  CHECK(std::fabs(gev_location_from_mean(1.4, 0.8, 1e-9) -
                  gev_location_from_mean(1.4, 0.8, 0.0)) < 1e-6);
  CHECK(std::fabs(gev_location_from_mean(1.4, 0.8, 2e-8) -
                  gev_location_from_mean(1.4, 0.8, 0.0)) < 1e-6);

  std::mt19937_64 rng(1903);
  std::uniform_real_distribution<double> umean(-1.0, 3.0), uscale(0.3, 2.0),
      uxi(-0.27, 0.9);
  for (int rep = 0; rep < 25; ++rep) {
    const double m = umean(rng), s = uscale(rng), xi = uxi(rng);
    const double mu = gev_location_from_mean(m, s, xi);
    CHECK_THAT(gev_mean_by_quadrature(mu, s, xi, false),
               Catch::Matchers::WithinAbs(m, 1e-6));
    CHECK_THAT(gev_mean_uncensored(mu, s, xi),
               Catch::Matchers::WithinAbs(m, 1e-10));
  }
}

TEST_CASE("parameter and argument domain errors") {
  CHECK_THROWS_AS(TruncatedNormal(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(TruncatedNormal(0.0, -1.0), DomainError);
  CHECK_THROWS_AS(LogNormal(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(CensoredShiftedGamma(0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(CensoredShiftedGamma(1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(CensoredGev(0.0, 0.0, 0.1), DomainError);
  CHECK_THROWS_AS(Beta(0.0, 1.0), DomainError);

  const LogNormal ln(0.0, 1.0);
  CHECK_THROWS_AS(quantile(ln, 0.0), DomainError);
  CHECK_THROWS_AS(quantile(ln, 1.0), DomainError);
  CHECK_THROWS_AS(quantile(ln, -0.2), DomainError);

  CHECK_THROWS_AS(moments_to_lognormal(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(moments_to_lognormal(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(moments_to_gamma(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(gev_location_from_mean(1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(mean(CensoredGev(0.0, 1.0, 1.2)), DomainError);
}
