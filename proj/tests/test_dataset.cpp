// Calendar parsing, dataset CSV round trips with row-tagged diagnostics, and
// the synthetic scenario generator (including the zero-mass calibration of
// the precipitation truth).

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emospool/dataset.hpp"

using namespace emospool;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

// two-group manifest used by the hand-written CSV fixtures
std::string small_manifest(const std::string& extra = "") {
  return R"({
  "variable": "wind_speed",
  "groups": [{"name": "ctrl", "size": 1}, {"name": "exch", "size": 2}],
  "forecasts": "forecasts.csv")" +
         extra + "\n}\n";
}

constexpr const char* kHeader = "date,station,obs,ctrl_1,exch_1,exch_2";

}  // namespace

TEST_CASE("ISO dates round trip and reject impossible values") {
  CHECK(parse_date("1970-01-01") == 0);
  CHECK(parse_date("2007-01-01") == 13514);
  CHECK(format_date(13514) == "2007-01-01");

  // every day over four years, leap day included, survives the round trip
  for (std::int32_t d = parse_date("2007-06-15"); d <= parse_date("2011-06-15");
       ++d)
    CHECK(parse_date(format_date(d)) == d);
  CHECK(parse_date("2008-02-29") == parse_date("2008-02-28") + 1);

  for (const char* bad : {"2007-02-29", "2100-02-29", "2024-13-01",
                          "2024-00-10", "2024-04-31", "2024-1-01", "20240101",
                          "2024-01-0x", ""})
    CHECK_THROWS_AS(parse_date(bad), DataError);
}

TEST_CASE("dataset save and load are value-identical") {
  const fs::path dir = fresh_dir("emospool-ds-roundtrip");

  Dataset ds;
  ds.manifest.variable = Variable::precipitation;
  ds.manifest.layout.names = {"ctrl", "exch"};
  ds.manifest.layout.sizes = {1, 2};
  const double third = 1.0 / 3.0;
  for (int day = 0; day < 3; ++day) {
    for (const char* st : {"KAST", "KBLI"}) {
      TrainingCase tc;
      tc.forecast.date = parse_date("2008-02-28") + day;
      tc.forecast.station = st;
      tc.forecast.variable = Variable::precipitation;
      tc.forecast.groups = {{third + day}, {0.0, std::sqrt(2.0) + day}};
      tc.observation = day == 0 ? 0.0 : third * day;
      ds.cases.push_back(std::move(tc));
    }
  }
  save_dataset(ds, (dir / "manifest.json").string());

  std::vector<std::string> log;
  const Dataset back = load_dataset((dir / "manifest.json").string(), &log);
  CHECK(log.empty());
  CHECK(back.manifest.variable == Variable::precipitation);
  CHECK(back.manifest.layout.names == ds.manifest.layout.names);
  CHECK(back.manifest.layout.sizes == ds.manifest.layout.sizes);
  CHECK(back.manifest.stations == std::vector<std::string>{"KAST", "KBLI"});
  CHECK(back.manifest.first_date == parse_date("2008-02-28"));
  CHECK(back.manifest.last_date == parse_date("2008-03-01"));
  REQUIRE(back.cases.size() == ds.cases.size());
  for (std::size_t i = 0; i < ds.cases.size(); ++i) {
    CHECK(back.cases[i].forecast.date == ds.cases[i].forecast.date);
    CHECK(back.cases[i].forecast.station == ds.cases[i].forecast.station);
    CHECK(back.cases[i].observation == ds.cases[i].observation);  // bitwise
    CHECK(back.cases[i].forecast.groups == ds.cases[i].forecast.groups);
  }

  // loading sorts by (date, station) regardless of file order
  std::swap(ds.cases.front(), ds.cases.back());
  save_dataset(ds, (dir / "manifest.json").string());
  const Dataset sorted = load_dataset((dir / "manifest.json").string());
  CHECK(sorted.cases.front().forecast.date == parse_date("2008-02-28"));
  CHECK(sorted.cases.front().forecast.station == "KAST");
}

TEST_CASE("loader reports structural problems with their row number") {
  const fs::path dir = fresh_dir("emospool-ds-errors");
  const fs::path mpath = dir / "manifest.json";
  write_file(mpath, small_manifest());

  const auto load_rows = [&](const std::string& rows) {
    write_file(dir / "forecasts.csv", std::string(kHeader) + "\n" + rows);
    return load_dataset(mpath.string());
  };

  CHECK_THROWS_WITH(load_rows("2007-01-02,S01,1.0,2.0,3.0\n"),
                    ContainsSubstring("row 2") &&
                        ContainsSubstring("expected 6 fields"));
  CHECK_THROWS_WITH(load_rows("2007-01-02,S01,-0.5,2.0,3.0,4.0\n"),
                    ContainsSubstring("row 2") &&
                        ContainsSubstring("negative observation"));
  CHECK_THROWS_WITH(load_rows("2007-01-02,S01,0.5,2.0,-3.0,4.0\n"),
                    ContainsSubstring("negative member"));
  CHECK_THROWS_WITH(load_rows("2007-01-02,S01,0.5,2.0,x,4.0\n"),
                    ContainsSubstring("bad number 'x'"));
  CHECK_THROWS_WITH(load_rows("2007-01-02,S01,1.0,2.0,3.0,4.0\n"
                              "2007-01-03,S01,1.0,2.0,3.0,4.0\n"
                              "2007-01-02,S01,9.0,2.0,3.0,4.0\n"),
                    ContainsSubstring("row 4") &&
                        ContainsSubstring("duplicate case"));
  CHECK_THROWS_WITH(load_rows("2007-02-30,S01,1.0,2.0,3.0,4.0\n"),
                    ContainsSubstring("malformed date"));
  CHECK_THROWS_WITH(load_rows("2007-01-02,,1.0,2.0,3.0,4.0\n"),
                    ContainsSubstring("empty station"));

  write_file(dir / "forecasts.csv", "date,station,obs,ctrl_1,exch_1\nx\n");
  CHECK_THROWS_WITH(load_dataset(mpath.string()),
                    ContainsSubstring("header mismatch"));
  write_file(dir / "forecasts.csv", "");
  CHECK_THROWS_WITH(load_dataset(mpath.string()), ContainsSubstring("empty"));
  CHECK_THROWS_AS(load_dataset((dir / "nope.json").string()), DataError);

  write_file(mpath, "{not json");
  CHECK_THROWS_AS(load_dataset(mpath.string()), DataError);
  write_file(mpath, R"({"variable": "wind_speed"})");
  CHECK_THROWS_AS(load_dataset(mpath.string()), DataError);
  write_file(mpath, R"({"variable": "sunshine", "groups": [],
                        "forecasts": "forecasts.csv"})");
  CHECK_THROWS_AS(load_dataset(mpath.string()), DataError);

  // layout rules: duplicates, bad sizes, non-alphanumeric names, total < 2
  GroupLayout bad;
  bad.names = {"a", "a"};
  bad.sizes = {1, 1};
  Dataset dup;
  dup.manifest.layout = bad;
  CHECK_THROWS_AS(save_dataset(dup, (dir / "m2.json").string()), DomainError);
  bad.names = {"a", "b"};
  bad.sizes = {1, 0};
  dup.manifest.layout = bad;
  CHECK_THROWS_AS(save_dataset(dup, (dir / "m2.json").string()), DomainError);
  bad.names = {"a_b"};
  bad.sizes = {2};
  dup.manifest.layout = bad;
  CHECK_THROWS_AS(save_dataset(dup, (dir / "m2.json").string()), DomainError);
  bad.names = {"solo"};
  bad.sizes = {1};
  dup.manifest.layout = bad;
  CHECK_THROWS_AS(save_dataset(dup, (dir / "m2.json").string()), DomainError);
}

TEST_CASE("rows with missing values are dropped and logged") {
  const fs::path dir = fresh_dir("emospool-ds-missing");
  write_file(dir / "manifest.json", small_manifest());
  write_file(dir / "forecasts.csv",
             std::string(kHeader) + "\n" +
                 "2007-01-02,S01,,2.0,3.0,4.0\n"
                 "2007-01-03,S01,1.0,2.0,,4.0\n"
                 "2007-01-04,S01,1.0,2.0,3.0,4.0\n"
                 "\n"
                 "2007-01-05,S01,1.5,2.0,3.0,4.0\n");
  std::vector<std::string> log;
  const Dataset ds = load_dataset((dir / "manifest.json").string(), &log);
  REQUIRE(ds.cases.size() == 2);
  CHECK(ds.cases[0].forecast.date == parse_date("2007-01-04"));
  REQUIRE(log.size() == 2);
  CHECK_THAT(log[0], ContainsSubstring("row 2"));
  CHECK_THAT(log[1], ContainsSubstring("row 3"));
}

TEST_CASE("station filter comes from the manifest") {
  const fs::path dir = fresh_dir("emospool-ds-stations");
  write_file(dir / "manifest.json",
             small_manifest(R"(, "stations": ["S01", "S02"])"));
  write_file(dir / "forecasts.csv",
             std::string(kHeader) + "\n2007-01-02,S07,1.0,2.0,3.0,4.0\n");
  CHECK_THROWS_WITH(load_dataset((dir / "manifest.json").string()),
                    ContainsSubstring("S07") &&
                        ContainsSubstring("not in manifest"));

  // without a station list every station name is accepted
  write_file(dir / "manifest.json", small_manifest());
  const Dataset ds = load_dataset((dir / "manifest.json").string());
  CHECK(ds.cases.size() == 1);
  CHECK(ds.cases[0].forecast.station == "S07");
}

TEST_CASE("scenario simulation is seeded, complete, and nonnegative") {
  SimulationOptions opts;
  opts.n_days = 4;
  opts.n_stations = 3;
  opts.seed = 42;

  const SimulatedDataset a = simulate_dataset(Scenario::uwme_wind, opts);
  CHECK(a.dataset.cases.size() == 12);
  CHECK(a.dataset.manifest.layout.names.size() == 8);
  CHECK(a.dataset.manifest.stations ==
        std::vector<std::string>{"S01", "S02", "S03"});
  CHECK(a.dataset.manifest.first_date == opts.start_date);
  CHECK(a.dataset.manifest.last_date == opts.start_date + 3);
  CHECK(a.truth.coefficients.family == Family::truncated_normal);
  for (const auto& tc : a.dataset.cases) {
    CHECK(tc.observation >= 0.0);
    for (const auto& g : tc.forecast.groups)
      for (double v : g) CHECK(v >= 0.0);
  }

  const SimulatedDataset b = simulate_dataset(Scenario::uwme_wind, opts);
  for (std::size_t i = 0; i < a.dataset.cases.size(); ++i) {
    CHECK(a.dataset.cases[i].observation == b.dataset.cases[i].observation);
    CHECK(a.dataset.cases[i].forecast.groups ==
          b.dataset.cases[i].forecast.groups);
  }
  opts.seed = 43;
  const SimulatedDataset c = simulate_dataset(Scenario::uwme_wind, opts);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.dataset.cases.size(); ++i)
    any_differ |=
        a.dataset.cases[i].observation != c.dataset.cases[i].observation;
  CHECK(any_differ);

  // the alhu scenarios carry a two-group ensemble and a mixture truth
  const SimulatedDataset mix = simulate_dataset(Scenario::alhu_wind, opts);
  CHECK(mix.dataset.manifest.layout.sizes == std::vector<int>{1, 10});
  CHECK(mix.truth.coefficients.family == Family::tn_ln_mixture);

  SimulationOptions bad = opts;
  bad.n_days = 0;
  CHECK_THROWS_AS(simulate_dataset(Scenario::uwme_wind, bad), DomainError);
  bad = opts;
  bad.zero_target = 1.0;
  CHECK_THROWS_AS(simulate_dataset(Scenario::uwme_precip, bad), DomainError);
}

TEST_CASE("precipitation zero mass is calibrated to its target") {
  SimulationOptions opts;
  opts.n_days = 100;
  opts.n_stations = 100;
  opts.seed = 7;
  opts.zero_target = 0.5;

  const SimulatedDataset sim = simulate_dataset(Scenario::uwme_precip, opts);
  CHECK(std::fabs(sim.truth.zero_prob_achieved - 0.5) < 0.03);
  CHECK(sim.truth.coefficients.shift_delta > 0.0);

  // the drawn observations agree with the calibrated truth mass
  std::size_t zeros = 0;
  for (const auto& tc : sim.dataset.cases)
    if (tc.observation == 0.0) ++zeros;
  const double frac =
      static_cast<double>(zeros) / static_cast<double>(sim.dataset.cases.size());
  CHECK(std::fabs(frac - sim.truth.zero_prob_achieved) < 0.02);
}

TEST_CASE("redraw_observations swaps the generating law in place") {
  SimulationOptions opts;
  opts.n_days = 5;
  opts.n_stations = 4;
  opts.seed = 11;
  SimulatedDataset sim = simulate_dataset(Scenario::uwme_wind, opts);
  const std::vector<TrainingCase> before = sim.dataset.cases;

  EmosCoefficients tn;
  tn.family = Family::truncated_normal;
  tn.mean_coeffs.assign(9, 0.1);
  tn.mean_coeffs[0] = 1.0;
  tn.spread0 = 0.5;
  tn.spread1 = 0.5;
  redraw_observations(sim.dataset, tn, 99);

  bool changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(sim.dataset.cases[i].forecast.groups ==
          before[i].forecast.groups);  // ensembles untouched
    changed |= sim.dataset.cases[i].observation != before[i].observation;
  }
  CHECK(changed);

  Dataset again = sim.dataset;
  for (auto& tc : again.cases) tc.observation = -1.0;
  redraw_observations(again, tn, 99);
  for (std::size_t i = 0; i < again.cases.size(); ++i)
    CHECK(again.cases[i].observation == sim.dataset.cases[i].observation);
}
