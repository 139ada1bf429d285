#ifndef EMOSPOOL_VERIFICATION_HPP
#define EMOSPOOL_VERIFICATION_HPP

// Forecast evaluation: rank and PIT histograms, mean-score tables,
// Diebold-Mariano tests, and the moving-block bootstrap over days.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "emospool/distributions.hpp"
#include "emospool/errors.hpp"
#include "emospool/rng.hpp"
#include "emospool/scoring.hpp"

namespace emospool {

struct ScoreEntry {
  std::int32_t date = 0;
  std::string station;
  double value = 0.0;
};

// Per-case scores of one forecast system (or a difference of two systems),
// keyed by (date, station).
struct ScoreSeries {
  std::string label;
  std::vector<ScoreEntry> entries;
};

inline void sort_series(ScoreSeries& s) {
  std::sort(s.entries.begin(), s.entries.end(),
            [](const ScoreEntry& a, const ScoreEntry& b) {
              return std::tie(a.date, a.station) < std::tie(b.date, b.station);
            });
  for (std::size_t i = 1; i < s.entries.size(); ++i) {
    if (s.entries[i - 1].date == s.entries[i].date &&
        s.entries[i - 1].station == s.entries[i].station)
      throw DataError("score series '" + s.label + "': duplicate case " +
                      s.entries[i].station);
  }
}

// Difference series a - b over the cases both systems scored.
inline ScoreSeries score_difference(const ScoreSeries& a,
                                    const ScoreSeries& b) {
  std::map<std::pair<std::int32_t, std::string>, double> bvals;
  for (const auto& e : b.entries) bvals.emplace(std::pair{e.date, e.station}, e.value);
  ScoreSeries d;
  d.label = a.label + "-" + b.label;
  for (const auto& e : a.entries) {
    const auto it = bvals.find({e.date, e.station});
    if (it != bvals.end())
      d.entries.push_back({e.date, e.station, e.value - it->second});
  }
  sort_series(d);
  return d;
}

// ---------------------------------------------------------------------------
// Histograms

enum class HistogramKind { rank, pit };

struct HistogramResult {
  HistogramKind kind = HistogramKind::pit;
  std::vector<double> edges;        // bin count + 1 entries
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;
};

// Verification rank histogram: rank of the observation among the M members,
// ties (zero observations among zero members, in particular) broken
// uniformly at random.  M + 1 bins.
inline HistogramResult rank_histogram(
    const std::vector<std::vector<double>>& ensembles,
    const std::vector<double>& observations, std::mt19937_64& rng) {
  detail::require(ensembles.size() == observations.size(),
                  "rank_histogram: ensembles and observations differ in size");
  detail::require(!ensembles.empty(), "rank_histogram: no cases");
  const std::size_t m = ensembles.front().size();
  detail::require(m >= 2, "rank_histogram: need at least two members");

  HistogramResult h;
  h.kind = HistogramKind::rank;
  h.counts.assign(m + 1, 0);
  h.edges.resize(m + 2);
  for (std::size_t i = 0; i < h.edges.size(); ++i)
    h.edges[i] = 0.5 + static_cast<double>(i);

  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    detail::require(ensembles[i].size() == m,
                    "rank_histogram: unequal ensemble sizes");
    std::size_t below = 0, equal = 0;
    for (double f : ensembles[i]) {
      if (f < observations[i]) ++below;
      else if (f == observations[i]) ++equal;
    }
    std::size_t rank = below;
    if (equal > 0)
      rank += std::uniform_int_distribution<std::size_t>(0, equal)(rng);
    ++h.counts[rank];
    ++h.n;
  }
  return h;
}

// PIT histogram over equal-width bins on [0,1]; values land in the last bin
// at 1.0 exactly.
inline HistogramResult pit_histogram(const std::vector<double>& pit_values,
                                     int bins = 20) {
  detail::require(bins >= 2, "pit_histogram: need at least two bins");
  detail::require(!pit_values.empty(), "pit_histogram: no values");
  HistogramResult h;
  h.kind = HistogramKind::pit;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    h.edges[static_cast<std::size_t>(i)] =
        static_cast<double>(i) / static_cast<double>(bins);
  for (double u : pit_values) {
    detail::require(u >= 0.0 && u <= 1.0, "pit_histogram: PIT outside [0,1]");
    auto b = static_cast<std::size_t>(u * bins);
    if (b >= static_cast<std::size_t>(bins)) b = static_cast<std::size_t>(bins) - 1;
    ++h.counts[b];
    ++h.n;
  }
  return h;
}

// Randomized PITs of parametric forecasts, then binned.
inline HistogramResult pit_histogram(
    const std::vector<DistributionSpec>& forecasts,
    const std::vector<double>& observations, int bins, std::mt19937_64& rng) {
  detail::require(forecasts.size() == observations.size(),
                  "pit_histogram: forecasts and observations differ in size");
  std::vector<double> u;
  u.reserve(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i)
    u.push_back(randomized_pit(forecasts[i], observations[i], runif(rng)));
  return pit_histogram(u, bins);
}

// ---------------------------------------------------------------------------
// Diebold-Mariano test

struct DmResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  std::int64_t n = 0;
  int lag = 1;
  bool variance_truncated = false;  // negative lag-augmented variance,
                                    // fell back to the lag-0 term
};

// Two-sided DM test of equal predictive accuracy from a score-difference
// series, with autocovariance correction up to lag tau - 1.
inline DmResult dm_test(const std::vector<double>& d, int tau) {
  detail::require(tau >= 1, "dm_test: horizon must be >= 1");
  const auto n = static_cast<std::int64_t>(d.size());
  detail::require(n >= 2, "dm_test: need at least two differences");

  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);

  const auto acov = [&](int lag) {
    double acc = 0.0;
    for (std::int64_t i = 0; i + lag < n; ++i)
      acc += (d[static_cast<std::size_t>(i)] - mean) *
             (d[static_cast<std::size_t>(i + lag)] - mean);
    return acc / static_cast<double>(n);
  };

  const double g0 = acov(0);
  if (g0 <= 0.0)
    throw DegenerateError("dm_test: constant score differences");
  double var = g0;
  for (int j = 1; j < tau; ++j) var += 2.0 * acov(j);

  DmResult r;
  r.n = n;
  r.lag = tau;
  if (var <= 0.0) {
    var = g0;
    r.variance_truncated = true;
  }
  r.t_stat = std::sqrt(static_cast<double>(n)) * mean / std::sqrt(var);
  r.p_value = 2.0 * (1.0 - detail::std_normal_cdf(std::fabs(r.t_stat)));
  return r;
}

inline DmResult dm_test(const ScoreSeries& d, int tau) {
  std::vector<double> v;
  v.reserve(d.entries.size());
  for (const auto& e : d.entries) v.push_back(e.value);
  return dm_test(v, tau);
}

// ---------------------------------------------------------------------------
// Moving-block bootstrap

struct BootstrapResult {
  double proportion_negative = 0.0;
  int repetitions = 0;
  int block_length = 0;
  std::vector<double> means;  // one mean score difference per repetition
};

// Each repetition draws a uniformly random block of block_length consecutive
// available days and averages the score differences of all stations in it.
// Per-repetition substreams make the result independent of evaluation order.
inline BootstrapResult block_bootstrap(const ScoreSeries& d, int block_length,
                                       int repetitions,
                                       std::uint64_t master_seed) {
  detail::require(repetitions >= 1, "block_bootstrap: repetitions must be >= 1");
  detail::require(block_length >= 1, "block_bootstrap: block length must be >= 1");
  std::map<std::int32_t, std::pair<double, std::int64_t>> per_day;
  for (const auto& e : d.entries) {
    auto& [sum, cnt] = per_day[e.date];
    sum += e.value;
    ++cnt;
  }
  const auto t_days = static_cast<int>(per_day.size());
  if (t_days < block_length)
    throw DataError("block_bootstrap: block length exceeds the number of days");

  // prefix sums over the day-ordered (sum, count) sequence
  std::vector<double> psum(per_day.size() + 1, 0.0);
  std::vector<std::int64_t> pcnt(per_day.size() + 1, 0);
  std::size_t i = 0;
  for (const auto& [day, sc] : per_day) {
    psum[i + 1] = psum[i] + sc.first;
    pcnt[i + 1] = pcnt[i] + sc.second;
    ++i;
  }

  BootstrapResult r;
  r.repetitions = repetitions;
  r.block_length = block_length;
  r.means.resize(static_cast<std::size_t>(repetitions));
  std::int64_t negative = 0;
  for (int rep = 0; rep < repetitions; ++rep) {
    auto rng = substream(master_seed, "bootstrap",
                         static_cast<std::uint64_t>(rep));
    const int start = std::uniform_int_distribution<int>(
        0, t_days - block_length)(rng);
    const double sum = psum[static_cast<std::size_t>(start + block_length)] -
                       psum[static_cast<std::size_t>(start)];
    const std::int64_t cnt =
        pcnt[static_cast<std::size_t>(start + block_length)] -
        pcnt[static_cast<std::size_t>(start)];
    const double mean = sum / static_cast<double>(cnt);
    r.means[static_cast<std::size_t>(rep)] = mean;
    if (mean < 0.0) ++negative;  // strictly negative; exact ties excluded
  }
  r.proportion_negative =
      static_cast<double>(negative) / static_cast<double>(repetitions);
  return r;
}

// ---------------------------------------------------------------------------
// Mean-score table

struct ScoreTableRow {
  std::string system;
  double mean_score = 0.0;
  std::int64_t n = 0;
};

struct ScoreTable {
  std::vector<ScoreTableRow> rows;
  // cases missing from at least one system, excluded everywhere
  std::vector<std::pair<std::int32_t, std::string>> dropped;
};

// Means over the cases every system scored (pairwise-complete); cases absent
// from any system are listed in `dropped`.
inline ScoreTable score_table(const std::vector<ScoreSeries>& systems) {
  detail::require(!systems.empty(), "score_table: no systems");
  using Key = std::pair<std::int32_t, std::string>;
  std::map<Key, std::size_t> seen;
  for (const auto& s : systems)
    for (const auto& e : s.entries) ++seen[{e.date, e.station}];

  std::set<Key> complete;
  ScoreTable table;
  for (const auto& [key, cnt] : seen) {
    if (cnt == systems.size()) complete.insert(key);
    else table.dropped.push_back(key);
  }
  detail::require(!complete.empty(), "score_table: no common cases");

  for (const auto& s : systems) {
    ScoreTableRow row;
    row.system = s.label;
    for (const auto& e : s.entries) {
      if (complete.count({e.date, e.station})) {
        row.mean_score += e.value;
        ++row.n;
      }
    }
    row.mean_score /= static_cast<double>(row.n);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace emospool

#endif  // EMOSPOOL_VERIFICATION_HPP
