#ifndef EMOSPOOL_PIPELINE_HPP
#define EMOSPOOL_PIPELINE_HPP

// End-to-end orchestration: rolling component fits, per-day combination
// fits, held-out evaluation, and the plain-CSV report artifacts.  Wind
// datasets use TN and LN components plus the jointly fitted TN-LN mixture;
// precipitation datasets use CSG and censored-GEV components.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "emospool/combination.hpp"
#include "emospool/dataset.hpp"
#include "emospool/emos.hpp"
#include "emospool/errors.hpp"
#include "emospool/optim.hpp"
#include "emospool/rng.hpp"
#include "emospool/scoring.hpp"
#include "emospool/verification.hpp"

namespace emospool {

// Stage-tagged failure.  exit_code follows the CLI contract: 1 for
// validation problems, 2 for convergence/degeneracy failures.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& message,
                int code)
      : std::runtime_error(stage + " stage: " + message), exit_code_(code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

namespace detail {

template <class F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const DegenerateError& e) {
    throw PipelineError(name, e.what(), 2);
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what(), 1);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configuration: flat key=value text, '#' starts a comment

struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig parse_text(const std::string& text,
                                   const std::string& origin) {
    KeyValueConfig kv;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      const std::size_t eol = std::min(text.find('\n', pos), text.size());
      std::string line = text.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw DataError(origin + " line " + std::to_string(line_no) +
                        ": expected key=value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty())
        throw DataError(origin + " line " + std::to_string(line_no) +
                        ": empty key");
      if (!kv.values.emplace(key, val).second)
        throw DataError(origin + " line " + std::to_string(line_no) +
                        ": duplicate key " + key);
    }
    return kv;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_text(text, path);
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const std::string& get_string(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw DataError("config: missing key " + key);
    return it->second;
  }

  long long get_int(const std::string& key) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(get_string(key), &used);
      if (used != get_string(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::logic_error&) {
      throw DataError("config key " + key + ": not an integer");
    }
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(get_string(key), &used);
      if (used != get_string(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::logic_error&) {
      throw DataError("config key " + key + ": not a number");
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& s = get_string(key);
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw DataError("config key " + key + ": expected 0/1/true/false");
  }
};

inline FitObjective parse_objective(std::string_view s) {
  if (s == "crps") return FitObjective::min_crps;
  if (s == "ml" || s == "logs") return FitObjective::max_likelihood;
  throw DataError("unknown objective: " + std::string(s) +
                  " (expected crps or ml)");
}

inline std::vector<Method> parse_method_list(std::string_view csv) {
  std::vector<Method> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t c = std::min(csv.find(',', pos), csv.size());
    const std::string_view tok = csv.substr(pos, c - pos);
    pos = c + 1;
    if (tok.empty()) throw DataError("empty method in list");
    const Method m = parse_method(tok);
    if (std::find(out.begin(), out.end(), m) != out.end())
      throw DataError("duplicate method " + std::string(method_name(m)));
    out.push_back(m);
  }
  return out;
}

struct PipelineConfig {
  int window_days = 30;
  FitObjective objective = FitObjective::min_crps;
  std::vector<Method> methods{Method::lp, Method::lp_pi, Method::slp,
                              Method::blp, Method::bml};
  std::int32_t eval_start = 0;  // 0: from the first eligible day
  std::int32_t eval_end = 0;    // 0: through the last eligible day
  int bootstrap_b = 50;         // block length, days
  int bootstrap_m = 10000;      // repetitions
  int tau = 2;                  // DM horizon
  std::uint64_t seed = 1;
  int fit_grid_points = 1001;    // combination-fit quadrature
  int eval_grid_points = 20001;  // evaluation quadrature
  int n_beta_components = 3;
  bool parallel = false;
  OptimOptions optim;
};

inline void apply_config(PipelineConfig& c, const KeyValueConfig& kv) {
  if (kv.has("window_days"))
    c.window_days = static_cast<int>(kv.get_int("window_days"));
  if (kv.has("objective")) c.objective = parse_objective(kv.get_string("objective"));
  if (kv.has("methods")) c.methods = parse_method_list(kv.get_string("methods"));
  if (kv.has("eval_start")) c.eval_start = parse_date(kv.get_string("eval_start"));
  if (kv.has("eval_end")) c.eval_end = parse_date(kv.get_string("eval_end"));
  if (kv.has("bootstrap_b"))
    c.bootstrap_b = static_cast<int>(kv.get_int("bootstrap_b"));
  if (kv.has("bootstrap_m"))
    c.bootstrap_m = static_cast<int>(kv.get_int("bootstrap_m"));
  if (kv.has("tau")) c.tau = static_cast<int>(kv.get_int("tau"));
  if (kv.has("seed")) c.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  if (kv.has("fit_grid_points"))
    c.fit_grid_points = static_cast<int>(kv.get_int("fit_grid_points"));
  if (kv.has("eval_grid_points"))
    c.eval_grid_points = static_cast<int>(kv.get_int("eval_grid_points"));
  if (kv.has("beta_components"))
    c.n_beta_components = static_cast<int>(kv.get_int("beta_components"));
  if (kv.has("parallel")) c.parallel = kv.get_bool("parallel");
}

inline void validate_config(const PipelineConfig& c) {
  detail::require(c.window_days >= 1, "config: window_days must be >= 1");
  detail::require(c.tau >= 1, "config: tau must be >= 1");
  detail::require(c.bootstrap_b >= 1, "config: bootstrap_b must be >= 1");
  detail::require(c.bootstrap_m >= 1, "config: bootstrap_m must be >= 1");
  detail::require(!c.methods.empty(), "config: no combination methods");
  detail::require(c.fit_grid_points >= 101 && c.eval_grid_points >= 101,
                  "config: quadrature grids need at least 101 points");
  detail::require(c.n_beta_components >= 1,
                  "config: beta_components must be >= 1");
  detail::require(c.eval_start == 0 || c.eval_end == 0 ||
                      c.eval_start <= c.eval_end,
                  "config: eval_start is after eval_end");
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    for (std::size_t j = i + 1; j < c.methods.size(); ++j)
      detail::require(c.methods[i] != c.methods[j],
                      "config: duplicate combination method");
}

// ---------------------------------------------------------------------------
// Report bundle

struct ParameterRecord {
  std::int32_t date = 0;
  std::string system;
  std::string name;
  double value = 0.0;
};

struct DmRecord {
  std::string row;
  std::string column;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct BootstrapRecord {
  std::string row;
  std::string column;
  double proportion_negative = 0.0;
};

struct ReportBundle {
  std::vector<std::string> systems;  // report row order
  std::vector<ScoreSeries> crps;     // per system, labels match
  ScoreTable table;
  std::vector<std::pair<std::string, HistogramResult>> histograms;
  std::vector<ParameterRecord> parameters;
  std::vector<DmRecord> dm;
  std::vector<BootstrapRecord> bootstrap;
  std::vector<std::string> warnings;
};

enum class PipelineStage { components, combinations, evaluation };

namespace detail {

inline void append_coefficient_records(std::int32_t date,
                                       const std::string& system,
                                       const FitResult& fr,
                                       std::vector<ParameterRecord>& out) {
  const EmosCoefficients& c = fr.coefficients;
  const auto push = [&](const std::string& n, double v) {
    out.push_back({date, system, n, v});
  };
  for (std::size_t i = 0; i < c.mean_coeffs.size(); ++i)
    push("a" + std::to_string(i), c.mean_coeffs[i]);
  switch (c.family) {
    case Family::truncated_normal:
    case Family::log_normal:
      push("b0", c.spread0);
      push("b1", c.spread1);
      break;
    case Family::censored_shifted_gamma:
      push("b0", c.spread0);
      push("b1", c.spread1);
      push("delta", c.shift_delta);
      break;
    case Family::censored_gev:
      push("nu", c.nu);
      push("b0", c.spread0);
      push("b1", c.spread1);
      push("xi", c.shape_xi);
      break;
    case Family::tn_ln_mixture:
      push("b0", c.spread0);
      push("b1", c.spread1);
      for (std::size_t i = 0; i < c.ln_mean_coeffs.size(); ++i)
        push("ln_a" + std::to_string(i), c.ln_mean_coeffs[i]);
      push("ln_b0", c.ln_spread0);
      push("ln_b1", c.ln_spread1);
      push("omega", c.omega);
      break;
  }
  push("converged", fr.converged ? 1.0 : 0.0);
}

inline void append_combination_records(std::int32_t date,
                                       const CombinationFit& cf,
                                       std::vector<ParameterRecord>& out) {
  const CombinationParams& p = cf.params;
  const std::string system = method_name(p.method);
  const auto push = [&](const std::string& n, double v) {
    out.push_back({date, system, n, v});
  };
  push("omega", p.omega);
  switch (p.method) {
    case Method::lp:
      break;
    case Method::lp_pi:
      push("degenerate", p.degenerate ? 1.0 : 0.0);
      break;
    case Method::slp:
      push("c", p.c);
      break;
    case Method::blp:
      push("alpha", p.alpha);
      push("beta", p.beta);
      break;
    case Method::bml:
      for (std::size_t l = 0; l < p.mixture.size(); ++l) {
        const std::string s = std::to_string(l);
        push("w" + s, p.mixture[l].weight);
        push("alpha" + s, p.mixture[l].alpha);
        push("beta" + s, p.mixture[l].beta);
      }
      break;
  }
  push("converged", cf.converged ? 1.0 : 0.0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Orchestration

inline ReportBundle run_pipeline(const PipelineConfig& cfg, const Dataset& data,
                                 PipelineStage upto = PipelineStage::evaluation) {
  detail::run_stage("validate", [&] {
    validate_config(cfg);
    detail::require(!data.cases.empty(), "dataset is empty");
    return 0;
  });

  const bool wind = data.manifest.variable == Variable::wind_speed;
  const Family fam_g =
      wind ? Family::truncated_normal : Family::censored_shifted_gamma;
  const Family fam_h = wind ? Family::log_normal : Family::censored_gev;
  std::vector<Family> families{fam_g, fam_h};
  if (wind) families.push_back(Family::tn_ln_mixture);

  ReportBundle bundle;

  // rolling component fits, cold-started for quality (see RollingOptions)
  std::map<Family, RollingFit> fits = detail::run_stage("train", [&] {
    RollingOptions ro;
    ro.window_days = cfg.window_days;
    ro.objective = cfg.objective;
    ro.parallel = cfg.parallel;
    ro.optim = cfg.optim;
    std::map<Family, RollingFit> m;
    for (Family f : families) m.emplace(f, rolling_fit(data.cases, f, ro));
    return m;
  });
  for (Family f : families)
    for (const auto& [d, fr] : fits.at(f).by_date)
      detail::append_coefficient_records(d, family_name(f), fr,
                                         bundle.parameters);
  if (upto == PipelineStage::components) return bundle;

  // dates fitted by every family, and cases grouped by date
  std::vector<std::int32_t> fitted;
  for (const auto& [d, fr] : fits.at(fam_g).by_date) {
    bool all = true;
    for (const auto& [f, rf] : fits)
      if (!rf.by_date.count(d)) all = false;
    if (all) fitted.push_back(d);
  }
  std::map<std::int32_t, std::vector<const TrainingCase*>> cases_by_date;
  for (const auto& tc : data.cases)
    cases_by_date[tc.forecast.date].push_back(&tc);

  // eligible evaluation dates: a full combination window of fitted days
  // must exist before each one
  std::vector<std::int32_t> eval_dates;
  for (std::size_t i = static_cast<std::size_t>(cfg.window_days);
       i < fitted.size(); ++i) {
    const std::int32_t d = fitted[i];
    if (cfg.eval_start != 0 && d < cfg.eval_start) continue;
    if (cfg.eval_end != 0 && d > cfg.eval_end) continue;
    eval_dates.push_back(d);
  }

  // per-day combination fits; sequential mode warm-starts day over day,
  // parallel mode cold-starts each day on worker threads
  std::map<std::int32_t, std::vector<CombinationFit>> combo =
      detail::run_stage("combine", [&] {
        if (eval_dates.empty())
          throw DegenerateError(
              "no evaluation dates: dataset shorter than twice the training "
              "window");
        CombinationFitOptions co;
        co.grid_points = cfg.fit_grid_points;
        co.optim = cfg.optim;

        // Optimized methods score window case j under day j's own fitted
        // coefficients (the real-time vintage); the plug-in weight instead
        // applies only the current day's coefficients to every window case,
        // which is its defining simplification, so it gets its own window.
        const bool want_pi =
            std::find(cfg.methods.begin(), cfg.methods.end(), Method::lp_pi) !=
            cfg.methods.end();
        std::vector<std::vector<CombinationCase>> windows(eval_dates.size());
        std::vector<std::vector<CombinationCase>> pi_windows(
            want_pi ? eval_dates.size() : 0);
        for (std::size_t di = 0; di < eval_dates.size(); ++di) {
          const std::int32_t d = eval_dates[di];
          const EmosCoefficients& cg0 =
              fits.at(fam_g).by_date.at(d).coefficients;
          const EmosCoefficients& ch0 =
              fits.at(fam_h).by_date.at(d).coefficients;
          const auto here = std::lower_bound(fitted.begin(), fitted.end(), d);
          const std::size_t hi = static_cast<std::size_t>(here - fitted.begin());
          const std::size_t lo = hi - static_cast<std::size_t>(cfg.window_days);
          int dropped = 0;
          for (std::size_t i = lo; i < hi; ++i) {
            const EmosCoefficients& cg =
                fits.at(fam_g).by_date.at(fitted[i]).coefficients;
            const EmosCoefficients& ch =
                fits.at(fam_h).by_date.at(fitted[i]).coefficients;
            for (const TrainingCase* tc : cases_by_date.at(fitted[i])) {
              try {
                windows[di].push_back({predictive(cg, tc->forecast),
                                       predictive(ch, tc->forecast),
                                       tc->observation});
              } catch (const DomainError&) {
                ++dropped;
              }
              if (!want_pi) continue;
              try {
                pi_windows[di].push_back({predictive(cg0, tc->forecast),
                                          predictive(ch0, tc->forecast),
                                          tc->observation});
              } catch (const DomainError&) {
                ++dropped;
              }
            }
          }
          if (windows[di].empty() || (want_pi && pi_windows[di].empty()))
            throw DegenerateError("combination window for " + format_date(d) +
                                  " is empty");
          if (dropped > 0)
            bundle.warnings.push_back(
                "combine: " + std::to_string(dropped) +
                " window cases outside the component link domain for " +
                format_date(d));
        }

        // the tabulated CDF grids are shared by every method on a day and
        // dropped as soon as that day is fitted.  Only BM_L is warm-started
        // day over day: it is the one method where that saves real time, and
        // the low-dimensional pools refit from the default starting point at
        // least as well as any chained solution.
        std::vector<std::vector<CombinationFit>> days(eval_dates.size());
        const auto fit_day =
            [&](std::size_t di,
                std::vector<std::optional<CombinationParams>>& warm) {
              const CombinationWindow prepared(windows[di], co);
              days[di].reserve(cfg.methods.size());
              for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
                CombinationFit cf =
                    cfg.methods[k] == Method::lp_pi
                        ? fit_combination(Method::lp_pi, pi_windows[di],
                                          cfg.n_beta_components, std::nullopt,
                                          co)
                        : fit_combination(cfg.methods[k], prepared,
                                          cfg.n_beta_components, warm[k]);
                if (cfg.methods[k] == Method::bml) warm[k] = cf.params;
                days[di].push_back(std::move(cf));
              }
            };
        if (cfg.parallel && eval_dates.size() > 1) {
          const unsigned n_threads = std::max(
              1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                     static_cast<unsigned>(eval_dates.size())));
          std::vector<std::future<void>> workers;
          std::atomic<std::size_t> next{0};
          for (unsigned t = 0; t < n_threads; ++t)
            workers.push_back(std::async(std::launch::async, [&] {
              std::vector<std::optional<CombinationParams>> warm(
                  cfg.methods.size());
              for (std::size_t di = next.fetch_add(1); di < eval_dates.size();
                   di = next.fetch_add(1)) {
                std::fill(warm.begin(), warm.end(), std::nullopt);
                fit_day(di, warm);
              }
            }));
          for (auto& w : workers) w.get();
        } else {
          std::vector<std::optional<CombinationParams>> warm(
              cfg.methods.size());
          for (std::size_t di = 0; di < eval_dates.size(); ++di)
            fit_day(di, warm);
        }

        std::map<std::int32_t, std::vector<CombinationFit>> out;
        for (std::size_t di = 0; di < eval_dates.size(); ++di) {
          for (const CombinationFit& cf : days[di])
            detail::append_combination_records(eval_dates[di], cf,
                                               bundle.parameters);
          out[eval_dates[di]] = std::move(days[di]);
        }
        return out;
      });
  if (upto == PipelineStage::combinations) return bundle;

  // held-out evaluation, PITs, and the comparison matrices
  detail::run_stage("verify", [&] {
    detail::require(
        cfg.bootstrap_b <= static_cast<int>(eval_dates.size()),
        "bootstrap block length exceeds the number of evaluation days");

    bundle.systems.push_back("ensemble");
    for (Family f : families) bundle.systems.push_back(family_name(f));
    for (Method m : cfg.methods) bundle.systems.push_back(method_name(m));
    const std::size_t n_sys = bundle.systems.size();
    bundle.crps.assign(n_sys, ScoreSeries{});
    for (std::size_t i = 0; i < n_sys; ++i)
      bundle.crps[i].label = bundle.systems[i];

    std::vector<std::vector<double>> pits(n_sys);
    std::vector<std::mt19937_64> pit_rng;
    for (std::size_t i = 1; i < n_sys; ++i)
      pit_rng.push_back(substream(cfg.seed, "pit", i));
    auto rank_rng = substream(cfg.seed, "pit", 0);
    std::vector<std::vector<double>> rank_ens;
    std::vector<double> rank_obs;

    for (const std::int32_t d : eval_dates) {
      const EmosCoefficients& cg = fits.at(fam_g).by_date.at(d).coefficients;
      const EmosCoefficients& ch = fits.at(fam_h).by_date.at(d).coefficients;
      const EmosCoefficients* cmix =
          wind ? &fits.at(Family::tn_ln_mixture).by_date.at(d).coefficients
               : nullptr;
      const std::vector<CombinationFit>& day = combo.at(d);
      for (const TrainingCase* tc : cases_by_date.at(d)) {
        const double y = tc->observation;
        std::vector<double> members;
        for (const auto& g : tc->forecast.groups)
          members.insert(members.end(), g.begin(), g.end());
        try {
          const DistributionSpec sg = predictive(cg, tc->forecast);
          const DistributionSpec sh = predictive(ch, tc->forecast);
          std::vector<PooledCdf> pools;
          if (cmix) {
            const TnLnMixture mix = tnln_predictive(*cmix, tc->forecast);
            CombinationParams mp;
            mp.method = Method::lp;
            mp.omega = mix.weight;
            pools.emplace_back(DistributionSpec(mix.tn),
                               DistributionSpec(mix.ln), mp);
          }
          for (std::size_t k = 0; k < cfg.methods.size(); ++k)
            pools.emplace_back(sg, sh, day[k].params);

          std::vector<double> vals(n_sys);
          vals[0] = crps_ensemble(members, y).value;
          vals[1] = crps_closed(sg, y).value;
          vals[2] = crps_closed(sh, y).value;
          for (std::size_t k = 0; k < pools.size(); ++k)
            vals[3 + k] = pooled_crps(pools[k], y,
                                      pool_grid(pools[k],
                                                cfg.eval_grid_points))
                              .value;

          rank_ens.push_back(members);
          rank_obs.push_back(y);
          for (std::size_t i = 0; i < n_sys; ++i)
            bundle.crps[i].entries.push_back(
                {d, tc->forecast.station, vals[i]});
          for (std::size_t i = 1; i < n_sys; ++i) {
            const double u = runif(pit_rng[i - 1]);
            double v;
            if (i == 1) {
              v = randomized_pit(sg, y, u);
            } else if (i == 2) {
              v = randomized_pit(sh, y, u);
            } else {
              const PooledCdf& p = pools[i - 3];
              v = y > 0.0 ? cdf(p, y) : u * cdf(p, 0.0);
            }
            pits[i].push_back(v);
          }
        } catch (const DomainError& e) {
          bundle.warnings.push_back("verify: case " + format_date(d) + "/" +
                                    tc->forecast.station +
                                    " skipped: " + e.what());
        }
      }
    }

    bundle.histograms.emplace_back(
        "ensemble", rank_histogram(rank_ens, rank_obs, rank_rng));
    for (std::size_t i = 1; i < n_sys; ++i)
      bundle.histograms.emplace_back(bundle.systems[i],
                                     pit_histogram(pits[i]));
    bundle.table = score_table(bundle.crps);

    for (std::size_t i = 0; i < n_sys; ++i)
      for (std::size_t j = 0; j < n_sys; ++j) {
        if (i == j) continue;
        const ScoreSeries diff =
            score_difference(bundle.crps[i], bundle.crps[j]);
        DmRecord rec{bundle.systems[i], bundle.systems[j], 0.0, 1.0};
        try {
          const DmResult r = dm_test(diff, cfg.tau);
          rec.t_stat = r.t_stat;
          rec.p_value = r.p_value;
        } catch (const DegenerateError&) {
          bundle.warnings.push_back("verify: DM degenerate for " +
                                    bundle.systems[i] + " vs " +
                                    bundle.systems[j]);
        }
        bundle.dm.push_back(std::move(rec));
        const BootstrapResult b = block_bootstrap(diff, cfg.bootstrap_b,
                                                  cfg.bootstrap_m, cfg.seed);
        bundle.bootstrap.push_back({bundle.systems[i], bundle.systems[j],
                                    b.proportion_negative});
      }
    return 0;
  });

  return bundle;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::ofstream open_report(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write report file " + path);
  return f;
}

}  // namespace detail

inline void write_mean_crps_csv(const ReportBundle& b,
                                const std::string& path) {
  auto f = detail::open_report(path);
  f << "system,mean_crps,n\n";
  for (const auto& row : b.table.rows)
    f << row.system << "," << detail::format_number(row.mean_score) << ","
      << row.n << "\n";
}

inline void write_parameters_csv(const ReportBundle& b,
                                 const std::string& path) {
  auto f = detail::open_report(path);
  f << "date,system,parameter,value\n";
  for (const auto& r : b.parameters)
    f << format_date(r.date) << "," << r.system << "," << r.name << ","
      << detail::format_number(r.value) << "\n";
}

inline void write_histograms_csv(const ReportBundle& b,
                                 const std::string& path) {
  auto f = detail::open_report(path);
  f << "system,kind,bin_left,bin_right,count\n";
  for (const auto& [system, h] : b.histograms) {
    const char* kind = h.kind == HistogramKind::rank ? "rank" : "pit";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      f << system << "," << kind << ","
        << detail::format_number(h.edges[i]) << ","
        << detail::format_number(h.edges[i + 1]) << "," << h.counts[i]
        << "\n";
  }
}

inline void write_dm_csv(const ReportBundle& b, const std::string& path) {
  auto f = detail::open_report(path);
  f << "row,column,t_stat,p_value\n";
  for (const auto& r : b.dm)
    f << r.row << "," << r.column << "," << detail::format_number(r.t_stat)
      << "," << detail::format_number(r.p_value) << "\n";
}

inline void write_bootstrap_csv(const ReportBundle& b,
                                const std::string& path) {
  auto f = detail::open_report(path);
  f << "row,column,proportion_negative\n";
  for (const auto& r : b.bootstrap)
    f << r.row << "," << r.column << ","
      << detail::format_number(r.proportion_negative) << "\n";
}

inline void write_reports(const ReportBundle& b, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto p = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  write_mean_crps_csv(b, p("mean_crps.csv"));
  write_parameters_csv(b, p("parameters.csv"));
  write_histograms_csv(b, p("histograms.csv"));
  write_dm_csv(b, p("dm_matrix.csv"));
  write_bootstrap_csv(b, p("bootstrap_matrix.csv"));
}

}  // namespace emospool

#endif  // EMOSPOOL_PIPELINE_HPP
