// Rank and PIT histograms, the Diebold-Mariano test, the moving-block
// bootstrap, and the mean-score table.  Calibration checks draw observations
// through boost quantiles so uniformity is a property of the generator, not
// of the code under test.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "emospool/verification.hpp"
#include "support/gen.hpp"
#include "support/stats.hpp"

using namespace emospool;

namespace {

ScoreSeries make_series(const std::string& label,
                        const std::vector<double>& values) {
  ScoreSeries s;
  s.label = label;
  for (std::size_t i = 0; i < values.size(); ++i)
    s.entries.push_back({static_cast<std::int32_t>(i + 1), "S01", values[i]});
  return s;
}

std::vector<std::uint64_t> as_counts(const HistogramResult& h) {
  std::vector<std::uint64_t> c;
  for (auto v : h.counts) c.push_back(static_cast<std::uint64_t>(v));
  return c;
}

}  // namespace

TEST_CASE("rank histogram placement, ties, and calibration") {
  auto rng = substream(2026, "test-rank", 0);

  SECTION("deterministic ranks without ties") {
    const std::vector<std::vector<double>> ens{{1.0, 2.0, 3.0},
                                               {1.0, 2.0, 3.0},
                                               {1.0, 2.0, 3.0}};
    const std::vector<double> obs{0.5, 2.5, 9.0};
    const HistogramResult h = rank_histogram(ens, obs, rng);
    REQUIRE(h.counts.size() == 4);
    CHECK(h.n == 3);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[2] == 1);
    CHECK(h.counts[3] == 1);
    REQUIRE(h.edges.size() == 5);
    CHECK(h.edges.front() == 0.5);
    CHECK(h.edges.back() == 4.5);
  }

  SECTION("full ties spread uniformly over all ranks") {
    // the dry case: every member and the observation are zero
    const int n = 30000;
    const std::vector<std::vector<double>> ens(n, {0.0, 0.0});
    const std::vector<double> obs(n, 0.0);
    const HistogramResult h = rank_histogram(ens, obs, rng);
    REQUIRE(h.counts.size() == 3);
    CHECK(h.n == n);
    CHECK(testsupport::chisq_uniform_pvalue(as_counts(h)) > 1e-4);
  }

  SECTION("exchangeable ensembles give a flat histogram") {
    const int n = 10000, m = 4;
    std::normal_distribution<double> member(2.0, 1.0);
    std::vector<std::vector<double>> ens;
    std::vector<double> obs;
    for (int i = 0; i < n; ++i) {
      std::vector<double> e(m);
      for (double& v : e) v = member(rng);
      ens.push_back(std::move(e));
      obs.push_back(member(rng));
    }
    const HistogramResult h = rank_histogram(ens, obs, rng);
    CHECK(testsupport::chisq_uniform_pvalue(as_counts(h)) > 0.01);
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(rank_histogram({}, {}, rng), DomainError);
    CHECK_THROWS_AS(rank_histogram({{1.0, 2.0}}, {0.5, 0.7}, rng),
                    DomainError);
    CHECK_THROWS_AS(rank_histogram({{1.0}}, {0.5}, rng), DomainError);
    CHECK_THROWS_AS(rank_histogram({{1.0, 2.0}, {1.0, 2.0, 3.0}}, {0.5, 0.5},
                                   rng),
                    DomainError);
  }
}

TEST_CASE("PIT histogram binning and calibration") {
  SECTION("bin placement") {
    const HistogramResult h =
        pit_histogram(std::vector<double>{0.0, 0.07, 0.5, 0.9999, 1.0}, 20);
    REQUIRE(h.counts.size() == 20);
    CHECK(h.n == 5);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[1] == 1);
    CHECK(h.counts[10] == 1);
    CHECK(h.counts[19] == 2);  // 1.0 lands in the last bin, not past it
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 1.0);
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(pit_histogram(std::vector<double>{}, 20), DomainError);
    CHECK_THROWS_AS(pit_histogram(std::vector<double>{0.5}, 1), DomainError);
    CHECK_THROWS_AS(pit_histogram(std::vector<double>{1.2}, 20), DomainError);
    CHECK_THROWS_AS(pit_histogram(std::vector<double>{-0.1}, 20),
                    DomainError);
  }

  SECTION("calibrated censored forecasts have uniform randomized PITs") {
    // heavy atom at zero: about a third of the observations are exact zeros
    auto rng = substream(2026, "test-pit", 0);
    std::uniform_real_distribution<double> u01(
        std::numeric_limits<double>::min(), 1.0);
    const DistributionSpec d = CensoredShiftedGamma(1.3, 1.1, 0.6);
    std::vector<double> pit;
    std::vector<DistributionSpec> forecasts;
    std::vector<double> obs;
    int zeros = 0;
    for (int i = 0; i < 10000; ++i) {
      const double y = testsupport::quantile_of(d, u01(rng));
      if (y == 0.0) ++zeros;
      pit.push_back(randomized_pit(d, y, u01(rng)));
      forecasts.push_back(d);
      obs.push_back(y);
    }
    CHECK(zeros > 2000);
    CHECK(testsupport::ks_uniform_pvalue(pit) > 0.01);
    const HistogramResult h = pit_histogram(forecasts, obs, 20, rng);
    CHECK(h.n == 10000);
    CHECK(testsupport::chisq_uniform_pvalue(as_counts(h)) > 0.01);
  }

  SECTION("underdispersed forecasts produce a U shape") {
    auto rng = substream(2026, "test-pit", 1);
    std::uniform_real_distribution<double> u01(
        std::numeric_limits<double>::min(), 1.0);
    std::vector<DistributionSpec> forecasts;
    std::vector<double> obs;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      forecasts.push_back(TruncatedNormal(3.0, 0.8));
      obs.push_back(
          testsupport::quantile_of(TruncatedNormal(3.0, 1.4), u01(rng)));
    }
    const HistogramResult h = pit_histogram(forecasts, obs, 20, rng);
    const double flat = static_cast<double>(h.n) / 20.0;
    CHECK(static_cast<double>(h.counts.front()) > 1.5 * flat);
    CHECK(static_cast<double>(h.counts.back()) > 1.5 * flat);
  }
}

TEST_CASE("Diebold-Mariano test") {
  SECTION("balanced alternating differences are a perfect tie") {
    std::vector<double> d;
    for (int i = 0; i < 100; ++i) d.push_back(i % 2 == 0 ? 1.0 : -1.0);
    const DmResult r = dm_test(d, 1);
    CHECK(r.t_stat == Catch::Approx(0.0).margin(1e-14));
    CHECK(r.p_value == Catch::Approx(1.0).margin(1e-14));
    CHECK(r.n == 100);
  }

  SECTION("negating the series negates the statistic") {
    auto rng = substream(2026, "test-dm", 0);
    std::normal_distribution<double> noise(0.08, 1.0);
    std::vector<double> d, neg;
    for (int i = 0; i < 400; ++i) {
      d.push_back(noise(rng));
      neg.push_back(-d.back());
    }
    const DmResult a = dm_test(d, 2);
    const DmResult b = dm_test(neg, 2);
    CHECK(a.t_stat == -b.t_stat);
    CHECK(a.p_value == b.p_value);
    CHECK(a.p_value >= 0.0);
    CHECK(a.p_value <= 1.0);
  }

  SECTION("positive autocorrelation widens the variance") {
    auto rng = substream(2026, "test-dm", 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> z(501);
    for (double& v : z) v = noise(rng);
    std::vector<double> d;  // MA(1) with positive lag-1 autocovariance
    for (std::size_t i = 1; i < z.size(); ++i)
      d.push_back(0.3 + z[i] + z[i - 1]);
    const DmResult short_lag = dm_test(d, 1);
    const DmResult long_lag = dm_test(d, 2);
    CHECK(std::fabs(long_lag.t_stat) < std::fabs(short_lag.t_stat));
    CHECK_FALSE(long_lag.variance_truncated);
  }

  SECTION("negative lag correction falls back to the lag-0 variance") {
    // alternating series of odd length: lag-1 autocovariance is close to -g0
    std::vector<double> d;
    for (int i = 0; i < 101; ++i) d.push_back(i % 2 == 0 ? 1.0 : -1.0);
    const DmResult r = dm_test(d, 2);
    CHECK(r.variance_truncated);
    const DmResult base = dm_test(d, 1);
    CHECK(r.t_stat == Catch::Approx(base.t_stat).margin(1e-14));
  }

  SECTION("degenerate and invalid inputs") {
    CHECK_THROWS_AS(dm_test(std::vector<double>(10, 0.25), 1),
                    DegenerateError);
    CHECK_THROWS_AS(dm_test(std::vector<double>{1.0, -1.0}, 0), DomainError);
    CHECK_THROWS_AS(dm_test(std::vector<double>{1.0}, 1), DomainError);
  }

  SECTION("series overload matches the plain vector") {
    const std::vector<double> vals{0.4, -0.2, 0.9, 0.1, -0.5, 0.3};
    const DmResult a = dm_test(make_series("d", vals), 2);
    const DmResult b = dm_test(vals, 2);
    CHECK(a.t_stat == b.t_stat);
    CHECK(a.p_value == b.p_value);
  }
}

TEST_CASE("moving-block bootstrap") {
  SECTION("sign counting is strict") {
    std::vector<double> neg(40), zero(40);
    for (std::size_t i = 0; i < neg.size(); ++i) {
      neg[i] = -0.1 - 0.01 * static_cast<double>(i);
      zero[i] = 0.0;
    }
    CHECK(block_bootstrap(make_series("neg", neg), 5, 200, 9)
              .proportion_negative == 1.0);
    CHECK(block_bootstrap(make_series("zero", zero), 5, 200, 9)
              .proportion_negative == 0.0);
  }

  SECTION("a block spanning all days reproduces the overall mean") {
    const std::vector<double> vals{1.0, -2.0, 0.5, -0.25, 0.75};
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    const BootstrapResult r =
        block_bootstrap(make_series("d", vals), 5, 50, 31);
    for (double m : r.means) CHECK(m == Catch::Approx(mean).margin(1e-15));
  }

  SECTION("stations within a day are averaged together") {
    ScoreSeries s;
    s.label = "two-station";
    // day means 1, -3, 1: single-day blocks only ever see those values
    s.entries = {{1, "A", 0.0},  {1, "B", 2.0},  {2, "A", -4.0},
                 {2, "B", -2.0}, {3, "A", 1.0},  {3, "B", 1.0}};
    const BootstrapResult r = block_bootstrap(s, 1, 3000, 77);
    for (double m : r.means)
      CHECK((m == Catch::Approx(1.0).margin(1e-15) ||
             m == Catch::Approx(-3.0).margin(1e-15)));
    CHECK(r.proportion_negative > 0.28);
    CHECK(r.proportion_negative < 0.39);
  }

  SECTION("seeded repetitions are reproducible") {
    auto rng = substream(2026, "test-boot", 0);
    std::normal_distribution<double> noise(-0.05, 1.0);
    std::vector<double> vals(120);
    for (double& v : vals) v = noise(rng);
    const ScoreSeries s = make_series("d", vals);
    const BootstrapResult a = block_bootstrap(s, 30, 500, 123);
    const BootstrapResult b = block_bootstrap(s, 30, 500, 123);
    CHECK(a.means == b.means);
    CHECK(a.proportion_negative == b.proportion_negative);
    const BootstrapResult c = block_bootstrap(s, 30, 500, 124);
    CHECK(a.means != c.means);
  }

  SECTION("input validation") {
    const ScoreSeries s = make_series("d", {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(block_bootstrap(s, 4, 10, 1), DataError);
    CHECK_THROWS_AS(block_bootstrap(s, 0, 10, 1), DomainError);
    CHECK_THROWS_AS(block_bootstrap(s, 2, 0, 1), DomainError);
  }
}

TEST_CASE("score series bookkeeping") {
  SECTION("sorting and duplicate detection") {
    ScoreSeries s;
    s.label = "x";
    s.entries = {{3, "B", 1.0}, {1, "A", 2.0}, {3, "A", 3.0}};
    sort_series(s);
    CHECK(s.entries[0].date == 1);
    CHECK(s.entries[1].station == "A");
    CHECK(s.entries[2].station == "B");
    s.entries.push_back({1, "A", 9.0});
    CHECK_THROWS_AS(sort_series(s), DataError);
  }

  SECTION("difference keeps only shared cases") {
    ScoreSeries a, b;
    a.label = "lp";
    b.label = "tn";
    a.entries = {{1, "A", 3.0}, {2, "A", 5.0}, {3, "A", 7.0}};
    b.entries = {{2, "A", 1.5}, {3, "A", 9.0}, {4, "A", 2.0}};
    const ScoreSeries d = score_difference(a, b);
    CHECK(d.label == "lp-tn");
    REQUIRE(d.entries.size() == 2);
    CHECK(d.entries[0].value == 3.5);
    CHECK(d.entries[1].value == -2.0);
  }

  SECTION("table means run over pairwise-complete cases") {
    ScoreSeries a = make_series("first", {2.0, 4.0, 6.0});
    ScoreSeries b = make_series("second", {1.0, 5.0, 9.0});
    b.entries.pop_back();  // second system misses day 3
    const ScoreTable t = score_table({a, b});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].system == "first");
    CHECK(t.rows[0].n == 2);
    CHECK(t.rows[0].mean_score == Catch::Approx(3.0));
    CHECK(t.rows[1].mean_score == Catch::Approx(3.0));
    REQUIRE(t.dropped.size() == 1);
    CHECK(t.dropped[0].first == 3);

    ScoreSeries c = make_series("third", {0.0, 0.0, 0.0});
    c.entries[0].date = 10;  // no overlap with day 1
    c.entries[1].date = 11;
    c.entries[2].date = 12;
    CHECK_THROWS_AS(score_table({a, c}), DomainError);
    CHECK_THROWS_AS(score_table({}), DomainError);
  }
}
