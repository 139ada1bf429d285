// Command-line surface: simulate / train / combine / verify / report.
// Exit codes: 0 success, 1 validation error, 2 convergence failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "emospool/pipeline.hpp"

namespace {

using namespace emospool;

const std::set<std::string> kKnownConfigKeys{
    "window_days",     "objective",   "methods",       "eval_start",
    "eval_end",        "bootstrap_b", "bootstrap_m",   "tau",
    "seed",            "fit_grid_points", "eval_grid_points",
    "beta_components", "parallel",    "scenario",      "n_days",
    "n_stations",      "zero_target", "start_date"};

KeyValueConfig load_checked_config(const std::string& path) {
  KeyValueConfig kv = KeyValueConfig::load(path);
  for (const auto& [key, value] : kv.values)
    if (!kKnownConfigKeys.count(key))
      throw DataError("config key " + key + " is not recognized");
  return kv;
}

// Pipeline flags shared by train/combine/verify/report; CLI values override
// the config file, which overrides the defaults.
struct PipelineFlags {
  std::string manifest;
  std::string config_path;
  std::string out_dir = "reports";
  int window_days = 0;
  std::string objective;
  std::string methods;
  std::string eval_start;
  std::string eval_end;
  int bootstrap_b = 0;
  int bootstrap_m = 0;
  int tau = 0;
  std::int64_t seed = 0;
  int fit_grid_points = 0;
  int eval_grid_points = 0;
  int beta_components = 0;
  bool parallel = false;

  CLI::Option* o_window = nullptr;
  CLI::Option* o_objective = nullptr;
  CLI::Option* o_methods = nullptr;
  CLI::Option* o_eval_start = nullptr;
  CLI::Option* o_eval_end = nullptr;
  CLI::Option* o_b = nullptr;
  CLI::Option* o_m = nullptr;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_fit_grid = nullptr;
  CLI::Option* o_eval_grid = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_parallel = nullptr;
};

void add_pipeline_flags(CLI::App* sub, PipelineFlags& f) {
  sub->add_option("--manifest", f.manifest, "dataset manifest (JSON)")
      ->required();
  sub->add_option("--config", f.config_path, "key=value configuration file");
  sub->add_option("--out", f.out_dir, "output directory (default: reports)");
  f.o_window = sub->add_option("--window-days", f.window_days,
                               "rolling training window length in days");
  f.o_objective =
      sub->add_option("--objective", f.objective, "fit objective: crps or ml");
  f.o_methods = sub->add_option(
      "--methods", f.methods, "combination methods, e.g. lp,slp,blp,bml,lp-pi");
  f.o_eval_start = sub->add_option("--eval-start", f.eval_start,
                                   "first evaluation date (YYYY-MM-DD)");
  f.o_eval_end = sub->add_option("--eval-end", f.eval_end,
                                 "last evaluation date (YYYY-MM-DD)");
  f.o_b = sub->add_option("--bootstrap-b", f.bootstrap_b,
                          "bootstrap block length in days");
  f.o_m = sub->add_option("--bootstrap-m", f.bootstrap_m,
                          "bootstrap repetitions");
  f.o_tau = sub->add_option("--tau", f.tau, "Diebold-Mariano horizon");
  f.o_seed = sub->add_option("--seed", f.seed, "master RNG seed");
  f.o_fit_grid = sub->add_option("--fit-grid-points", f.fit_grid_points,
                                 "combination-fit quadrature points");
  f.o_eval_grid = sub->add_option("--eval-grid-points", f.eval_grid_points,
                                  "evaluation quadrature points");
  f.o_beta = sub->add_option("--beta-components", f.beta_components,
                             "beta mixture components for bml");
  f.o_parallel =
      sub->add_flag("--parallel", f.parallel, "parallel cold-start fits");
}

PipelineConfig build_config(const PipelineFlags& f) {
  PipelineConfig cfg;
  if (!f.config_path.empty())
    apply_config(cfg, load_checked_config(f.config_path));
  if (f.o_window->count()) cfg.window_days = f.window_days;
  if (f.o_objective->count()) cfg.objective = parse_objective(f.objective);
  if (f.o_methods->count()) cfg.methods = parse_method_list(f.methods);
  if (f.o_eval_start->count()) cfg.eval_start = parse_date(f.eval_start);
  if (f.o_eval_end->count()) cfg.eval_end = parse_date(f.eval_end);
  if (f.o_b->count()) cfg.bootstrap_b = f.bootstrap_b;
  if (f.o_m->count()) cfg.bootstrap_m = f.bootstrap_m;
  if (f.o_tau->count()) cfg.tau = f.tau;
  if (f.o_seed->count()) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.o_fit_grid->count()) cfg.fit_grid_points = f.fit_grid_points;
  if (f.o_eval_grid->count()) cfg.eval_grid_points = f.eval_grid_points;
  if (f.o_beta->count()) cfg.n_beta_components = f.beta_components;
  if (f.o_parallel->count()) cfg.parallel = true;
  return cfg;
}

Dataset load_with_warnings(const std::string& manifest) {
  std::vector<std::string> log;
  Dataset ds = load_dataset(manifest, &log);
  for (const auto& w : log) std::cerr << "warning: " << w << "\n";
  return ds;
}

void print_warnings(const ReportBundle& bundle) {
  for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << "\n";
}

int run_pipeline_command(const PipelineFlags& flags, PipelineStage upto,
                         bool with_parameters, bool with_verification) {
  const PipelineConfig cfg = build_config(flags);
  const Dataset ds = load_with_warnings(flags.manifest);
  const ReportBundle bundle = run_pipeline(cfg, ds, upto);
  print_warnings(bundle);

  std::filesystem::create_directories(flags.out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(flags.out_dir) / name).string();
  };
  if (with_parameters) write_parameters_csv(bundle, path("parameters.csv"));
  if (with_verification) {
    write_mean_crps_csv(bundle, path("mean_crps.csv"));
    write_histograms_csv(bundle, path("histograms.csv"));
    write_dm_csv(bundle, path("dm_matrix.csv"));
    write_bootstrap_csv(bundle, path("bootstrap_matrix.csv"));
    for (const auto& row : bundle.table.rows)
      std::cout << row.system << ": mean CRPS "
                << detail::format_number(row.mean_score) << " over " << row.n
                << " cases\n";
  }
  std::cout << "wrote reports to " << flags.out_dir << "\n";
  return 0;
}

// simulate flags, also readable from the same config file
struct SimulateFlags {
  std::string scenario;
  std::string config_path;
  std::string out_dir = "data";
  int n_days = 0;
  int n_stations = 0;
  std::int64_t seed = 0;
  double zero_target = 0.0;
  std::string start_date;

  CLI::Option* o_scenario = nullptr;
  CLI::Option* o_days = nullptr;
  CLI::Option* o_stations = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_zero = nullptr;
  CLI::Option* o_start = nullptr;
};

void add_simulate_flags(CLI::App* sub, SimulateFlags& f) {
  f.o_scenario = sub->add_option(
      "--scenario", f.scenario,
      "uwme_wind, alhu_wind, uwme_precip, or alhu_precip");
  sub->add_option("--config", f.config_path, "key=value configuration file");
  sub->add_option("--out", f.out_dir, "output directory (default: data)");
  f.o_days = sub->add_option("--days", f.n_days, "number of days");
  f.o_stations = sub->add_option("--stations", f.n_stations,
                                 "number of stations");
  f.o_seed = sub->add_option("--seed", f.seed, "master RNG seed");
  f.o_zero = sub->add_option("--zero-target", f.zero_target,
                             "precipitation: mean point mass at zero");
  f.o_start = sub->add_option("--start-date", f.start_date,
                              "first date (YYYY-MM-DD)");
}

int run_simulate(const SimulateFlags& f) {
  SimulationOptions opts;
  std::string scenario_str;
  if (!f.config_path.empty()) {
    const KeyValueConfig kv = load_checked_config(f.config_path);
    if (kv.has("scenario")) scenario_str = kv.get_string("scenario");
    if (kv.has("n_days")) opts.n_days = static_cast<int>(kv.get_int("n_days"));
    if (kv.has("n_stations"))
      opts.n_stations = static_cast<int>(kv.get_int("n_stations"));
    if (kv.has("seed"))
      opts.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    if (kv.has("zero_target")) opts.zero_target = kv.get_double("zero_target");
    if (kv.has("start_date"))
      opts.start_date = parse_date(kv.get_string("start_date"));
  }
  if (f.o_scenario->count()) scenario_str = f.scenario;
  if (scenario_str.empty())
    throw DataError("simulate: --scenario (or config key scenario) required");
  if (f.o_days->count()) opts.n_days = f.n_days;
  if (f.o_stations->count()) opts.n_stations = f.n_stations;
  if (f.o_seed->count()) opts.seed = static_cast<std::uint64_t>(f.seed);
  if (f.o_zero->count()) opts.zero_target = f.zero_target;
  if (f.o_start->count()) opts.start_date = parse_date(f.start_date);

  const SimulatedDataset sim =
      simulate_dataset(parse_scenario(scenario_str), opts);

  std::filesystem::create_directories(f.out_dir);
  const auto manifest =
      (std::filesystem::path(f.out_dir) / "manifest.json").string();
  save_dataset(sim.dataset, manifest);

  const EmosCoefficients& c = sim.truth.coefficients;
  nlohmann::json truth;
  truth["scenario"] = scenario_name(sim.truth.scenario);
  truth["family"] = family_name(c.family);
  truth["mean_coeffs"] = c.mean_coeffs;
  truth["spread0"] = c.spread0;
  truth["spread1"] = c.spread1;
  truth["shift_delta"] = c.shift_delta;
  truth["shape_xi"] = c.shape_xi;
  truth["nu"] = c.nu;
  truth["omega"] = c.omega;
  truth["ln_mean_coeffs"] = c.ln_mean_coeffs;
  truth["ln_spread0"] = c.ln_spread0;
  truth["ln_spread1"] = c.ln_spread1;
  truth["zero_target"] = sim.truth.zero_target;
  truth["zero_prob_achieved"] = sim.truth.zero_prob_achieved;
  std::ofstream tf(std::filesystem::path(f.out_dir) / "truth.json");
  if (!tf) throw DataError("cannot write truth record in " + f.out_dir);
  tf << truth.dump(2) << "\n";

  std::cout << "wrote " << sim.dataset.cases.size() << " cases to "
            << f.out_dir << "\n";
  if (sim.dataset.manifest.variable == Variable::precipitation)
    std::cout << "calibrated zero probability: "
              << detail::format_number(sim.truth.zero_prob_achieved) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMOS post-processing and predictive-pool combination"};
  app.require_subcommand(1);

  SimulateFlags sim_flags;
  CLI::App* sim = app.add_subcommand(
      "simulate", "generate a synthetic scenario dataset");
  add_simulate_flags(sim, sim_flags);

  PipelineFlags train_flags, combine_flags, verify_flags, report_flags;
  CLI::App* train = app.add_subcommand(
      "train", "rolling component fits; writes parameters.csv");
  add_pipeline_flags(train, train_flags);
  CLI::App* combine = app.add_subcommand(
      "combine", "component and combination fits; writes parameters.csv");
  add_pipeline_flags(combine, combine_flags);
  CLI::App* verify = app.add_subcommand(
      "verify", "full run; writes scores, histograms, and test matrices");
  add_pipeline_flags(verify, verify_flags);
  CLI::App* report = app.add_subcommand(
      "report", "full run; writes all report files");
  add_pipeline_flags(report, report_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_flags);
    if (train->parsed())
      return run_pipeline_command(train_flags, PipelineStage::components,
                                  true, false);
    if (combine->parsed())
      return run_pipeline_command(combine_flags, PipelineStage::combinations,
                                  true, false);
    if (verify->parsed())
      return run_pipeline_command(verify_flags, PipelineStage::evaluation,
                                  false, true);
    if (report->parsed())
      return run_pipeline_command(report_flags, PipelineStage::evaluation,
                                  true, true);
  } catch (const emospool::PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const emospool::DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
