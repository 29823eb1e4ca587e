#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rctmnar/report_io.hpp"

using namespace rctmnar;

namespace {

EstimateReport sample_report() {
  EstimateReport r;
  r.estimand = Estimand::p_outcome_t1;
  r.point = 0.625;
  r.lower = 0.6;
  r.upper = 0.7;
  r.flags.positivity_violation = true;
  StratumDetail d;
  d.key = StratumKey{{0, 1}};
  d.raw = 0.61;
  d.resolved = 0.625;
  d.weight = 1.0;
  d.status = PositivityStatus::lack_of_data;
  r.strata.push_back(d);
  return r;
}

}  // namespace

TEST_CASE("csv rows map directly onto records") {
  std::istringstream in(
      "t,s,a,o,x_age,x_site\n"
      "1,0,1,1,2,0\n"
      "0,1,0,,1,1\n");
  const LoadResult result = parse_csv(in);
  REQUIRE(result.report.ok());
  REQUIRE(result.dataset.has_value());
  const auto& records = result.dataset->records();
  REQUIRE(records.size() == 2);
  CHECK(records[0].t == 1);
  CHECK(records[0].s == 0);
  CHECK(records[0].a == 1);
  CHECK(*records[0].o_star == 1);
  CHECK(records[0].x == std::vector<int>{2, 0});
  CHECK(!records[1].o_star.has_value());
  CHECK(result.dataset->covariate_names() == std::vector<std::string>{"age", "site"});
}

TEST_CASE("outcome present while unavailable is a row error") {
  std::istringstream in(
      "t,s,a,o\n"
      "1,0,0,1\n"
      "0,0,1,\n"
      "0,0,1,2\n"
      "1,0,1,0\n");
  const LoadResult result = parse_csv(in);
  CHECK(!result.report.ok());
  REQUIRE(result.report.errors.size() == 3);
  CHECK(result.report.errors[0].row == 1);
  CHECK(result.report.errors[0].message == "outcome present while unavailable (a=0)");
  CHECK(result.report.errors[1].row == 2);
  CHECK(result.report.errors[1].message == "outcome missing while available (a=1)");
  CHECK(result.report.errors[2].row == 3);
}

TEST_CASE("validation collects all errors instead of failing fast") {
  std::istringstream in(
      "t,s,a,o,pa_0,pa_1\n"
      "2,0,1,1,0.5,0.5\n"
      "1,0,1,1,1.7,0.5\n"
      "1,0,1,1,0.5,0.5\n");
  const LoadResult result = parse_csv(in);
  CHECK(result.report.errors.size() == 2);
  CHECK(result.report.pa_arity == PaArity::two);
}

TEST_CASE("datasets round-trip through CSV byte-for-byte semantics") {
  std::istringstream in(
      "t,s,a,o,x_k,pa_00,pa_10,pa_01,pa_11,o_true\n"
      "1,0,1,1,2,0.125,0.25,0.375,0.5,1\n"
      "0,1,0,,0,0.9999999999999999,0.1,0.2,0.30000000000000004,0\n");
  const LoadResult first = parse_csv(in);
  REQUIRE(first.report.ok());
  std::ostringstream out;
  save_csv(*first.dataset, out, true);
  std::istringstream again(out.str());
  const LoadResult second = parse_csv(again);
  REQUIRE(second.report.ok());
  REQUIRE(second.dataset->size() == first.dataset->size());
  for (std::size_t i = 0; i < first.dataset->size(); ++i) {
    const auto& a = first.dataset->records()[i];
    const auto& b = second.dataset->records()[i];
    CHECK(a.t == b.t);
    CHECK(a.s == b.s);
    CHECK(a.a == b.a);
    CHECK(a.o_star == b.o_star);
    CHECK(a.x == b.x);
    CHECK(a.pa == b.pa);
    CHECK(a.o_true == b.o_true);
  }
  // serialization itself is deterministic
  std::ostringstream out2;
  save_csv(*second.dataset, out2, true);
  CHECK(out.str() == out2.str());
}

TEST_CASE("emit_report is deterministic and keeps flags in every format") {
  const EstimateReport report = sample_report();
  for (ReportFormat format : {ReportFormat::json, ReportFormat::csv, ReportFormat::text}) {
    const std::string once = emit_report(report, format);
    CHECK(once == emit_report(report, format));
    CHECK(once.find("positivity_violation") != std::string::npos);
  }
  // absent ci is emitted as null / empty, never omitted
  const std::string json = emit_report(report, ReportFormat::json);
  CHECK(json.find("\"ci\":null") != std::string::npos);
  const std::string csv = emit_report(report, ReportFormat::csv);
  CHECK(csv.find("ci_lo") != std::string::npos);
  const std::string text = emit_report(report, ReportFormat::text);
  CHECK(text.find("ci: none") != std::string::npos);

  EstimateReport with_ci = report;
  with_ci.ci = {0.55, 0.71};
  CHECK(emit_report(with_ci, ReportFormat::json).find("\"ci\":{\"lo\":0.55") !=
        std::string::npos);
}

TEST_CASE("scenario and grid configs parse with defaults and validation") {
  const std::string text = R"({
    "mechanism": "sa_internal",
    "n": 500,
    "seed": 7,
    "covariates": [{"name": "x1", "probs": [0.5, 0.5]}],
    "u": {"probs": [0.7, 0.3]},
    "s_model": {"intercept": -1, "t": 1, "x": [0.5], "u": 0.5},
    "o_model": {"intercept": -0.5, "t": 1, "s": -1, "x": [0.5], "u": 0.5},
    "a_model": {"intercept": 1.5, "o": 1, "s": -1, "x": [-0.5]}
  })";
  const ScenarioSpec spec = scenario_from_json_text(text);
  CHECK(spec.n == 500);
  CHECK(spec.mechanism == ScenarioDagId::sa_internal);
  CHECK(spec.o_on_a == 1.0);

  CHECK_THROWS_AS(scenario_from_json_text("{"), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json_text("{}"), std::invalid_argument);
  // forbidden coefficient under the declared mechanism
  const std::string bad = R"({"mechanism": "mcar", "a_model": {"o": 1.0}})";
  CHECK_THROWS_AS(scenario_from_json_text(bad), std::invalid_argument);

  const std::string grid_text = R"({
    "scenario": {"mechanism": "mcar", "n": 100},
    "sample_sizes": [100, 200],
    "effects": [0.5],
    "reps": 3,
    "estimators": ["naive", "mnar"]
  })";
  const MonteCarloGrid grid = grid_from_json_text(grid_text);
  CHECK(grid.sample_sizes.size() == 2);
  CHECK(grid.reps == 3);
}

TEST_CASE("presets exist and carry the experiment grids") {
  const MonteCarloGrid internal = preset_grid("paper-internal");
  CHECK(internal.base.mechanism == ScenarioDagId::sa_internal);
  CHECK(internal.sample_sizes == std::vector<std::int64_t>{1000, 5000, 20000});
  CHECK(internal.effects == std::vector<double>{0.5, 1.0, 2.0});
  const MonteCarloGrid external = preset_grid("paper-external");
  CHECK(external.base.mechanism == ScenarioDagId::sa_external_pr);
  CHECK_THROWS_AS(preset_grid("nope"), std::invalid_argument);
}

TEST_CASE("emit_plots renders one self-contained SVG per panel") {
  MonteCarloResult result;
  for (const std::string est : {"naive", "mnar"}) {
    for (const std::string estimand : {"p0", "p1", "ate", "aclor"}) {
      for (double effect : {0.5, 1.0}) {
        MonteCarloRow row;
        row.n = 1000;
        row.effect = effect;
        row.estimator = est;
        row.estimand = estimand;
        row.mean_bias = effect * 0.01;
        row.ci_lo = row.mean_bias - 0.02;
        row.ci_hi = row.mean_bias + 0.02;
        row.mean_bound_range = 0.05;
        row.missing_prop_t0 = 0.2;
        row.missing_prop_t1 = 0.3;
        row.reps = 5;
        result.rows.push_back(row);
      }
    }
  }
  const std::string dir = (std::filesystem::temp_directory_path() / "rctmnar_plots").string();
  std::filesystem::remove_all(dir);
  const auto files = emit_plots(result, dir);
  CHECK(files.size() >= 6);  // 4 bias panels + bound range + missingness
  for (const auto& path : files) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string svg = buf.str();
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("href") == std::string::npos);      // no external assets
    CHECK(svg.find("<image") == std::string::npos);
  }
  std::filesystem::remove_all(dir);

  // single grid cell still renders
  MonteCarloResult tiny;
  MonteCarloRow row;
  row.n = 100;
  row.effect = 1.0;
  row.estimator = "mnar";
  row.estimand = "p1";
  row.reps = 1;
  tiny.rows.push_back(row);
  const std::string dir2 = (std::filesystem::temp_directory_path() / "rctmnar_plots2").string();
  std::filesystem::remove_all(dir2);
  CHECK(!emit_plots(tiny, dir2).empty());
  std::filesystem::remove_all(dir2);

  MonteCarloResult empty;
  CHECK_THROWS_AS(emit_plots(empty, dir2), std::invalid_argument);
}

TEST_CASE("montecarlo csv has the tidy shape") {
  MonteCarloResult result;
  MonteCarloRow row;
  row.n = 1000;
  row.effect = 0.5;
  row.estimator = "mnar";
  row.estimand = "ate";
  row.mean_bias = 0.001234567890123;
  row.reps = 200;
  result.rows.push_back(row);
  const std::string csv = montecarlo_csv(result);
  CHECK(csv.find("n,effect,estimator,estimand,mean_bias,mean_abs_bias") == 0);
  CHECK(csv.find("1000,0.5,mnar,ate,0.00123456789012") != std::string::npos);
}
