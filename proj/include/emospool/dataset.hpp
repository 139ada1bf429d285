#ifndef EMOSPOOL_DATASET_HPP
#define EMOSPOOL_DATASET_HPP

// Forecast-case datasets: CSV + JSON-manifest storage and the synthetic
// scenario generator.  The forecast file schema is
//   date,station,obs,<group>_<index>,...
// with the group layout declared in the manifest, keeping member
// exchangeability explicit in the data.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "emospool/distributions.hpp"
#include "emospool/emos.hpp"
#include "emospool/errors.hpp"
#include "emospool/rng.hpp"

namespace emospool {

// ---------------------------------------------------------------------------
// Calendar days (proleptic Gregorian, days since 1970-01-01)

namespace detail {

inline std::int32_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) -
                                   719468);
}

inline void civil_from_days(std::int32_t z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe =
      (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yr + (m <= 2);
}

}  // namespace detail

inline std::int32_t parse_date(std::string_view iso) {
  const auto bad = [&] {
    throw DataError("malformed date '" + std::string(iso) +
                    "' (expected YYYY-MM-DD)");
  };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') bad();
  int y = 0, m = 0, d = 0;
  const auto num = [&](std::size_t from, std::size_t len, int& out) {
    const auto* first = iso.data() + from;
    const auto res = std::from_chars(first, first + len, out);
    if (res.ec != std::errc{} || res.ptr != first + len) bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::int32_t days = detail::days_from_civil(y, m, d);
  int y2, m2, d2;
  detail::civil_from_days(days, y2, m2, d2);
  if (y2 != y || m2 != m || d2 != d) bad();  // e.g. month 13 or Feb 30
  return days;
}

inline std::string format_date(std::int32_t days) {
  int y, m, d;
  detail::civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

// ---------------------------------------------------------------------------
// Manifest and dataset

struct GroupLayout {
  std::vector<std::string> names;
  std::vector<int> sizes;
};

struct DatasetManifest {
  Variable variable = Variable::wind_speed;
  GroupLayout layout;
  std::string forecasts_file = "forecasts.csv";
  std::vector<std::string> stations;
  std::int32_t first_date = 0;
  std::int32_t last_date = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<TrainingCase> cases;  // sorted by (date, station)
};

inline const char* variable_name(Variable v) {
  return v == Variable::wind_speed ? "wind_speed" : "precipitation";
}

inline Variable parse_variable(std::string_view s) {
  if (s == "wind_speed") return Variable::wind_speed;
  if (s == "precipitation") return Variable::precipitation;
  throw DataError("unknown variable: " + std::string(s));
}

namespace detail {

inline void validate_layout(const GroupLayout& layout) {
  require(!layout.names.empty() && layout.names.size() == layout.sizes.size(),
          "manifest: group names and sizes must match and be nonempty");
  int total = 0;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < layout.names.size(); ++k) {
    const auto& name = layout.names[k];
    require(!name.empty(), "manifest: empty group name");
    for (char ch : name)
      require(std::isalnum(static_cast<unsigned char>(ch)) != 0,
              "manifest: group names must be alphanumeric");
    require(seen.insert(name).second,
            "manifest: duplicate group name " + name);
    require(layout.sizes[k] >= 1, "manifest: group sizes must be >= 1");
    total += layout.sizes[k];
  }
  require(total >= 2, "manifest: ensemble needs at least two members");
}

inline std::string forecast_header(const GroupLayout& layout) {
  std::string h = "date,station,obs";
  for (std::size_t k = 0; k < layout.names.size(); ++k)
    for (int i = 1; i <= layout.sizes[k]; ++i)
      h += "," + layout.names[k] + "_" + std::to_string(i);
  return h;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = line.find(',', pos);
    if (c == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
}

inline double parse_number(std::string_view s, int row) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() ||
      !std::isfinite(v))
    throw DataError("forecast file row " + std::to_string(row) +
                    ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Reads the manifest and its forecast CSV.  Rows with an empty observation
// or member field are dropped and reported through `log`; structural
// problems (schema mismatch, bad numbers, duplicate cases) are hard errors
// tagged with the row number.
inline Dataset load_dataset(const std::string& manifest_path,
                            std::vector<std::string>* log = nullptr) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open manifest " + manifest_path);
  nlohmann::json j;
  try {
    mf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + manifest_path + ": " + e.what());
  }

  Dataset ds;
  try {
    ds.manifest.variable = parse_variable(j.at("variable").get<std::string>());
    for (const auto& g : j.at("groups")) {
      ds.manifest.layout.names.push_back(g.at("name").get<std::string>());
      ds.manifest.layout.sizes.push_back(g.at("size").get<int>());
    }
    ds.manifest.forecasts_file = j.at("forecasts").get<std::string>();
    if (j.contains("stations"))
      ds.manifest.stations = j["stations"].get<std::vector<std::string>>();
    if (j.contains("first_date"))
      ds.manifest.first_date = parse_date(j["first_date"].get<std::string>());
    if (j.contains("last_date"))
      ds.manifest.last_date = parse_date(j["last_date"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + manifest_path + ": " + e.what());
  }
  detail::validate_layout(ds.manifest.layout);

  const auto csv_path = std::filesystem::path(manifest_path).parent_path() /
                        ds.manifest.forecasts_file;
  std::ifstream f(csv_path);
  if (!f) throw DataError("cannot open forecast file " + csv_path.string());

  std::string line;
  if (!std::getline(f, line))
    throw DataError("forecast file " + csv_path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected = detail::forecast_header(ds.manifest.layout);
  if (line != expected)
    throw DataError("forecast file row 1: header mismatch (expected '" +
                    expected + "')");

  const std::set<std::string> station_filter(ds.manifest.stations.begin(),
                                             ds.manifest.stations.end());
  std::set<std::pair<std::int32_t, std::string>> keys;
  int member_total = 0;
  for (int s : ds.manifest.layout.sizes) member_total += s;

  int row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != static_cast<std::size_t>(member_total) + 3)
      throw DataError("forecast file row " + std::to_string(row) +
                      ": expected " + std::to_string(member_total + 3) +
                      " fields, got " + std::to_string(fields.size()));

    bool missing = false;
    for (std::size_t i = 2; i < fields.size(); ++i)
      if (fields[i].empty()) missing = true;
    if (missing) {
      if (log)
        log->push_back("row " + std::to_string(row) +
                       " dropped: missing observation or member value");
      continue;
    }

    TrainingCase tc;
    tc.forecast.date = parse_date(fields[0]);
    tc.forecast.station = std::string(fields[1]);
    tc.forecast.variable = ds.manifest.variable;
    if (tc.forecast.station.empty())
      throw DataError("forecast file row " + std::to_string(row) +
                      ": empty station");
    if (!station_filter.empty() && !station_filter.count(tc.forecast.station))
      throw DataError("forecast file row " + std::to_string(row) +
                      ": station " + tc.forecast.station +
                      " not in manifest");
    tc.observation = detail::parse_number(fields[2], row);
    std::size_t col = 3;
    for (std::size_t k = 0; k < ds.manifest.layout.sizes.size(); ++k) {
      std::vector<double> g;
      for (int i = 0; i < ds.manifest.layout.sizes[k]; ++i)
        g.push_back(detail::parse_number(fields[col++], row));
      tc.forecast.groups.push_back(std::move(g));
    }
    if (tc.observation < 0.0)
      throw DataError("forecast file row " + std::to_string(row) +
                      ": negative observation");
    for (const auto& g : tc.forecast.groups)
      for (double v : g)
        if (v < 0.0)
          throw DataError("forecast file row " + std::to_string(row) +
                          ": negative member value");
    if (!keys.insert({tc.forecast.date, tc.forecast.station}).second)
      throw DataError("forecast file row " + std::to_string(row) +
                      ": duplicate case " + std::string(fields[0]) + "/" +
                      tc.forecast.station);
    ds.cases.push_back(std::move(tc));
  }

  std::sort(ds.cases.begin(), ds.cases.end(),
            [](const TrainingCase& a, const TrainingCase& b) {
              return std::tie(a.forecast.date, a.forecast.station) <
                     std::tie(b.forecast.date, b.forecast.station);
            });
  return ds;
}

// Writes manifest JSON and the forecast CSV next to it.  Values are written
// with 17 significant digits, so a load after save is value-identical.
inline void save_dataset(const Dataset& ds, const std::string& manifest_path) {
  detail::validate_layout(ds.manifest.layout);
  std::set<std::string> stations;
  std::int32_t lo = ds.cases.empty() ? 0 : ds.cases.front().forecast.date;
  std::int32_t hi = lo;
  for (const auto& tc : ds.cases) {
    stations.insert(tc.forecast.station);
    lo = std::min(lo, tc.forecast.date);
    hi = std::max(hi, tc.forecast.date);
  }

  nlohmann::json j;
  j["variable"] = variable_name(ds.manifest.variable);
  j["groups"] = nlohmann::json::array();
  for (std::size_t k = 0; k < ds.manifest.layout.names.size(); ++k)
    j["groups"].push_back({{"name", ds.manifest.layout.names[k]},
                           {"size", ds.manifest.layout.sizes[k]}});
  j["forecasts"] = ds.manifest.forecasts_file;
  j["stations"] = std::vector<std::string>(stations.begin(), stations.end());
  if (!ds.cases.empty()) {
    j["first_date"] = format_date(lo);
    j["last_date"] = format_date(hi);
  }

  std::ofstream mf(manifest_path);
  if (!mf) throw DataError("cannot write manifest " + manifest_path);
  mf << j.dump(2) << "\n";

  const auto csv_path = std::filesystem::path(manifest_path).parent_path() /
                        ds.manifest.forecasts_file;
  std::ofstream f(csv_path);
  if (!f) throw DataError("cannot write forecast file " + csv_path.string());
  f << detail::forecast_header(ds.manifest.layout) << "\n";
  for (const auto& tc : ds.cases) {
    f << format_date(tc.forecast.date) << "," << tc.forecast.station << ","
      << detail::format_number(tc.observation);
    for (const auto& g : tc.forecast.groups)
      for (double v : g) f << "," << detail::format_number(v);
    f << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

enum class Scenario { uwme_wind, alhu_wind, uwme_precip, alhu_precip };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::uwme_wind: return "uwme_wind";
    case Scenario::alhu_wind: return "alhu_wind";
    case Scenario::uwme_precip: return "uwme_precip";
    case Scenario::alhu_precip: return "alhu_precip";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "uwme_wind") return Scenario::uwme_wind;
  if (s == "alhu_wind") return Scenario::alhu_wind;
  if (s == "uwme_precip") return Scenario::uwme_precip;
  if (s == "alhu_precip") return Scenario::alhu_precip;
  throw DataError("unknown scenario: " + std::string(s));
}

struct SimulationOptions {
  int n_days = 160;
  int n_stations = 10;
  std::uint64_t seed = 1;
  // precipitation scenarios: average point mass the truth law puts on zero
  double zero_target = 0.5;
  std::int32_t start_date = 13514;  // 2007-01-01
};

// Everything the generator used, for oracle tests: the truth coefficients
// (a TN-LN mixture set for alhu_wind) and the calibrated zero-probability
// actually achieved on the generated case set.
struct SimulationTruth {
  Scenario scenario = Scenario::uwme_wind;
  EmosCoefficients coefficients;
  double zero_target = 0.0;
  double zero_prob_achieved = 0.0;
};

struct SimulatedDataset {
  Dataset dataset;
  SimulationTruth truth;
};

namespace detail {

// Per-scenario generator constants.  Members are noisy, biased copies of a
// latent seasonal signal; biases and noise scales are shared within each
// exchangeable group.  A per-case spread shock (wind) or dryness shock
// (precipitation) decorrelates ensemble dispersion from the signal level so
// every link coefficient is well identified.
struct ScenarioSpec {
  GroupLayout layout;
  Variable variable;
  std::vector<double> bias;     // per group
  std::vector<double> noise;    // per group
  EmosCoefficients truth;
};

inline ScenarioSpec scenario_spec(Scenario sc) {
  ScenarioSpec s;
  switch (sc) {
    case Scenario::uwme_wind: {
      s.variable = Variable::wind_speed;
      for (int k = 1; k <= 8; ++k) {
        s.layout.names.push_back("m" + std::to_string(k));
        s.layout.sizes.push_back(1);
      }
      s.bias = {-0.5, -0.35, -0.2, -0.05, 0.05, 0.2, 0.35, 0.5};
      s.noise = {0.7, 0.8, 0.9, 1.0, 0.7, 0.8, 0.9, 1.0};
      s.truth.family = Family::truncated_normal;
      s.truth.mean_coeffs = {0.4,  0.16, 0.14, 0.13, 0.12,
                             0.12, 0.11, 0.11, 0.11};
      s.truth.spread0 = 0.5;
      s.truth.spread1 = 0.9;
      break;
    }
    case Scenario::alhu_wind: {
      s.variable = Variable::wind_speed;
      s.layout.names = {"ctrl", "exch"};
      s.layout.sizes = {1, 10};
      s.bias = {0.15, -0.1};
      s.noise = {0.55, 0.95};
      // deliberately complementary halves: a tight near-symmetric TN and a
      // heavy-tailed LN, so each pure fit miscalibrates in its own direction
      // and only pooled or mixture forecasts calibrate
      s.truth.family = Family::tn_ln_mixture;
      s.truth.mean_coeffs = {0.3, 0.28, 0.068};
      s.truth.spread0 = 0.25;
      s.truth.spread1 = 0.3;
      s.truth.ln_mean_coeffs = {0.4, 0.26, 0.066};
      s.truth.ln_spread0 = 6.0;
      s.truth.ln_spread1 = 2.0;
      s.truth.omega = 0.5;
      break;
    }
    case Scenario::uwme_precip: {
      s.variable = Variable::precipitation;
      for (int k = 1; k <= 8; ++k) {
        s.layout.names.push_back("m" + std::to_string(k));
        s.layout.sizes.push_back(1);
      }
      s.bias = {-0.25, -0.18, -0.1, -0.03, 0.03, 0.1, 0.18, 0.25};
      s.noise = {0.5, 0.58, 0.66, 0.74, 0.5, 0.58, 0.66, 0.74};
      s.truth.family = Family::censored_shifted_gamma;
      s.truth.mean_coeffs = {0.25, 0.12, 0.11, 0.11, 0.1,
                             0.1,  0.09, 0.09, 0.08};
      s.truth.spread0 = 0.35;
      s.truth.spread1 = 0.6;
      s.truth.shift_delta = 0.8;  // replaced by calibration
      break;
    }
    case Scenario::alhu_precip: {
      s.variable = Variable::precipitation;
      s.layout.names = {"ctrl", "exch"};
      s.layout.sizes = {1, 10};
      s.bias = {-0.1, -0.05};
      s.noise = {0.45, 0.75};
      s.truth.family = Family::censored_shifted_gamma;
      s.truth.mean_coeffs = {0.2, 0.28, 0.042};
      s.truth.spread0 = 0.3;
      s.truth.spread1 = 0.55;
      s.truth.shift_delta = 0.8;  // replaced by calibration
      break;
    }
  }
  return s;
}

constexpr double kTwoPi = 6.2831853071795864769;

inline EnsembleForecast simulate_ensemble(const ScenarioSpec& s,
                                          std::int32_t date, int day_index,
                                          int station, int n_stations,
                                          std::mt19937_64& rng) {
  const double phase =
      kTwoPi * static_cast<double>(station) / static_cast<double>(n_stations);
  const double season =
      std::sin(kTwoPi * static_cast<double>(day_index) / 365.25 + phase);

  double latent;
  double shock = 0.0;  // spread multiplier (wind) or dryness offset (precip)
  if (s.variable == Variable::wind_speed) {
    latent = std::exp(1.25 + 0.45 * season + 0.35 * rnorm(rng));
    shock = 0.6 + 0.8 * runif(rng);
  } else {
    const double p_wet = 0.55 + 0.25 * season;
    if (runif(rng) < p_wet) {
      const double scale = 1.6 * (1.0 + 0.35 * season);
      latent = std::gamma_distribution<double>(1.6, scale)(rng);
    } else {
      latent = 0.0;
    }
    shock = 0.7 * runif(rng);
  }

  EnsembleForecast e;
  e.date = date;
  e.variable = s.variable;
  e.groups.resize(s.layout.sizes.size());
  for (std::size_t k = 0; k < s.layout.sizes.size(); ++k) {
    for (int i = 0; i < s.layout.sizes[k]; ++i) {
      const double z = rnorm(rng);
      double f;
      if (s.variable == Variable::wind_speed) {
        f = latent + s.bias[k] + shock * s.noise[k] * z;
      } else {
        f = latent + s.bias[k] + s.noise[k] * z - shock;
      }
      e.groups[k].push_back(std::max(0.0, f));
    }
  }
  return e;
}

inline double truth_zero_mass(const ScenarioSpec& s,
                              const EnsembleForecast& e) {
  return point_mass_at_zero(predictive(s.truth, e));
}

// Bisection of one scalar knob against the mean zero probability, which must
// be nondecreasing in the knob.  Clamps at the bracket ends when the target
// is out of reach; the caller records the mass actually achieved.
template <class SetKnob>
double calibrate_zero_mass(ScenarioSpec& s,
                           const std::vector<EnsembleForecast>& ensembles,
                           double target, double lo, double hi,
                           const SetKnob& set_knob) {
  const auto mean_mass = [&](double knob) {
    set_knob(s, knob);
    double acc = 0.0;
    for (const auto& e : ensembles) acc += truth_zero_mass(s, e);
    return acc / static_cast<double>(ensembles.size());
  };
  if (target <= mean_mass(lo)) return mean_mass(lo);
  if (target >= mean_mass(hi)) return mean_mass(hi);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_mass(mid) < target) lo = mid;
    else hi = mid;
  }
  return mean_mass(0.5 * (lo + hi));
}

}  // namespace detail

// Draws a complete scenario dataset.  Ensembles are generated first; for the
// precipitation scenarios the CSG shift is then calibrated by bisection so
// the truth law's average point mass at zero matches zero_target on this
// exact case set; finally observations are drawn from the truth law given
// each ensemble.  Fixed seeds give bit-identical datasets.
inline SimulatedDataset simulate_dataset(Scenario sc,
                                         const SimulationOptions& opts) {
  detail::require(opts.n_days >= 1 && opts.n_stations >= 1,
                  "simulate_dataset: need at least one day and station");
  detail::require(opts.zero_target > 0.0 && opts.zero_target < 1.0,
                  "simulate_dataset: zero_target must lie inside (0,1)");
  detail::ScenarioSpec spec = detail::scenario_spec(sc);

  std::size_t width = 2;
  for (int v = opts.n_stations; v >= 100; v /= 10) ++width;
  std::vector<std::string> stations;
  for (int st = 1; st <= opts.n_stations; ++st) {
    std::string id = std::to_string(st);
    if (id.size() < width) id.insert(0, width - id.size(), '0');
    stations.emplace_back("S" + id);
  }

  auto ens_rng = substream(opts.seed, "sim-ensembles");
  std::vector<EnsembleForecast> ensembles;
  ensembles.reserve(static_cast<std::size_t>(opts.n_days) *
                    static_cast<std::size_t>(opts.n_stations));
  for (int day = 0; day < opts.n_days; ++day)
    for (int st = 0; st < opts.n_stations; ++st) {
      EnsembleForecast e = detail::simulate_ensemble(
          spec, opts.start_date + day, day, st, opts.n_stations, ens_rng);
      e.station = stations[static_cast<std::size_t>(st)];
      ensembles.push_back(std::move(e));
    }

  SimulationTruth truth;
  truth.scenario = sc;
  truth.zero_target = opts.zero_target;
  if (spec.variable == Variable::precipitation) {
    truth.zero_prob_achieved = detail::calibrate_zero_mass(
        spec, ensembles, opts.zero_target, 1e-3, 64.0,
        [](detail::ScenarioSpec& s, double v) { s.truth.shift_delta = v; });
  }

  auto obs_rng = substream(opts.seed, "sim-observations");
  SimulatedDataset out;
  out.dataset.manifest.variable = spec.variable;
  out.dataset.manifest.layout = spec.layout;
  out.dataset.manifest.stations = stations;
  out.dataset.manifest.first_date = opts.start_date;
  out.dataset.manifest.last_date = opts.start_date + opts.n_days - 1;
  out.dataset.cases.reserve(ensembles.size());
  for (auto& e : ensembles) {
    TrainingCase tc;
    double y;
    if (spec.truth.family == Family::tn_ln_mixture) {
      const TnLnMixture mix = tnln_predictive(spec.truth, e);
      y = runif(obs_rng) < mix.weight
              ? sample(DistributionSpec(mix.tn), obs_rng)
              : sample(DistributionSpec(mix.ln), obs_rng);
    } else {
      y = sample(predictive(spec.truth, e), obs_rng);
    }
    tc.forecast = std::move(e);
    tc.observation = y;
    out.dataset.cases.push_back(std::move(tc));
  }

  truth.coefficients = spec.truth;
  out.truth = truth;
  return out;
}

// Replaces every observation with a draw from the given EMOS law applied to
// the existing ensembles: turns any scenario's forecasts into exact
// generator-as-oracle data for another family.
inline void redraw_observations(Dataset& ds, const EmosCoefficients& c,
                                std::uint64_t seed) {
  auto rng = substream(seed, "sim-redraw");
  for (auto& tc : ds.cases) {
    if (c.family == Family::tn_ln_mixture) {
      const TnLnMixture mix = tnln_predictive(c, tc.forecast);
      tc.observation = runif(rng) < mix.weight
                           ? sample(DistributionSpec(mix.tn), rng)
                           : sample(DistributionSpec(mix.ln), rng);
    } else {
      tc.observation = sample(predictive(c, tc.forecast), rng);
    }
  }
}

}  // namespace emospool

#endif  // EMOSPOOL_DATASET_HPP
