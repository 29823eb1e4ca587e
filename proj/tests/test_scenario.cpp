#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rctmnar/estimators.hpp"
#include "rctmnar/scenario.hpp"
#include "support/chi2.hpp"

using namespace rctmnar;

namespace {

ScenarioSpec base_spec(ScenarioDagId mechanism) {
  ScenarioSpec spec;
  spec.mechanism = mechanism;
  spec.n = 2000;
  spec.p_treat = 0.5;
  spec.covariates = {{"x1", {0.6, 0.4}}};
  spec.u = {"u", {0.7, 0.3}};
  spec.intercept_s = -1.0;
  spec.effect_t_on_s = 1.0;
  spec.x_on_s = {0.5};
  spec.u_on_s = 0.6;
  spec.intercept_o = -0.4;
  spec.effect_t_on_o = 1.0;
  spec.effect_s_on_o = -1.0;
  spec.x_on_o = {0.8};
  spec.u_on_o = 0.5;
  spec.intercept_a = 1.2;
  spec.seed = 99;
  switch (mechanism) {
    case ScenarioDagId::mcar:
      break;
    case ScenarioDagId::mar:
      spec.s_on_a = -1.5;
      spec.x_on_a = {-0.5};
      break;
    case ScenarioDagId::oa_internal:
      spec.o_on_a = 1.0;
      spec.x_on_a = {-0.5};
      break;
    case ScenarioDagId::oa_external:
    case ScenarioDagId::oa_external_pr:
      spec.o_on_a = 1.0;
      spec.x_on_a = {-0.5};
      spec.u_on_a = -0.8;
      break;
    case ScenarioDagId::sa_internal:
      spec.o_on_a = 1.0;
      spec.s_on_a = -1.5;
      spec.x_on_a = {-0.5};
      break;
    case ScenarioDagId::sa_external:
    case ScenarioDagId::sa_external_pr:
      spec.o_on_a = 1.0;
      spec.s_on_a = -1.5;
      spec.x_on_a = {-0.5};
      spec.u_on_a = -0.8;
      break;
  }
  return spec;
}

bool datasets_equal(const TrialDataset& a, const TrialDataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TrialRecord& ra = a.records()[i];
    const TrialRecord& rb = b.records()[i];
    if (ra.t != rb.t || ra.s != rb.s || ra.a != rb.a || ra.o_star != rb.o_star ||
        ra.x != rb.x || ra.pa != rb.pa || ra.o_true != rb.o_true)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mechanism constraints reject forbidden coefficients") {
  ScenarioSpec mcar = base_spec(ScenarioDagId::mcar);
  mcar.o_on_a = 0.5;
  CHECK_THROWS_AS(mcar.validate(), std::invalid_argument);

  ScenarioSpec mar = base_spec(ScenarioDagId::mar);
  mar.o_on_a = 0.5;
  CHECK_THROWS_AS(mar.validate(), std::invalid_argument);
  mar = base_spec(ScenarioDagId::mar);
  mar.u_on_a = 0.5;
  CHECK_THROWS_AS(mar.validate(), std::invalid_argument);

  ScenarioSpec oa = base_spec(ScenarioDagId::oa_internal);
  oa.s_on_a = 0.5;
  CHECK_THROWS_AS(oa.validate(), std::invalid_argument);
  oa = base_spec(ScenarioDagId::oa_internal);
  oa.u_on_a = 0.5;
  CHECK_THROWS_AS(oa.validate(), std::invalid_argument);

  ScenarioSpec sa = base_spec(ScenarioDagId::sa_internal);
  sa.u_on_a = 0.5;
  CHECK_THROWS_AS(sa.validate(), std::invalid_argument);

  CHECK_NOTHROW(base_spec(ScenarioDagId::sa_external_pr).validate());

  ScenarioSpec bad = base_spec(ScenarioDagId::mcar);
  bad.p_treat = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = base_spec(ScenarioDagId::mcar);
  bad.covariates[0].probs = {0.5, 0.4};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("identical specs generate identical datasets") {
  const ScenarioSpec spec = base_spec(ScenarioDagId::sa_external_pr);
  const TrialDataset a = generate(spec);
  const TrialDataset b = generate(spec);
  CHECK(datasets_equal(a, b));
  const TrialDataset c = generate(spec.with_seed(100));
  CHECK(!datasets_equal(a, c));
}

TEST_CASE("an infinite availability intercept removes all masking") {
  ScenarioSpec spec = base_spec(ScenarioDagId::mcar);
  spec.intercept_a = std::numeric_limits<double>::infinity();
  const TrialDataset data = generate(spec);
  for (const auto& r : data.records()) {
    CHECK(r.a == 1);
    REQUIRE(r.o_star.has_value());
    CHECK(*r.o_star == *r.o_true);
  }
}

TEST_CASE("every record follows the observed-outcome masking rule") {
  const TrialDataset data = generate(base_spec(ScenarioDagId::sa_internal));
  std::int64_t masked = 0;
  for (const auto& r : data.records()) {
    CHECK(r.o_star.has_value() == (r.a == 1));
    if (r.a == 1) CHECK(*r.o_star == *r.o_true);
    masked += r.a == 0;
  }
  CHECK(masked > 0);
}

TEST_CASE("potential responses obey the consistency formula and exact propensities") {
  ScenarioSpec spec = base_spec(ScenarioDagId::sa_external_pr);
  spec.n = 5000;
  GenerationTrace trace;
  const TrialDataset data = generate_traced(spec, &trace);
  REQUIRE(trace.potential_a.size() == data.size());

  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const TrialRecord& r = data.records()[i];
    const int o = *r.o_true;
    // exactly one potential response determines A
    CHECK(r.a == trace.potential_a[i][r.s + 2 * o]);
    // reported propensities equal the generative conditional probabilities
    REQUIRE(r.pa.size() == 4);
    const int u = trace.u_level[i];
    for (int o_val = 0; o_val < 2; ++o_val)
      for (int s_val = 0; s_val < 2; ++s_val) {
        const double eta = spec.intercept_a + spec.o_on_a * o_val + spec.s_on_a * s_val +
                           spec.x_on_a[0] * r.x[0] + spec.u_on_a * u;
        CHECK(r.pa[static_cast<std::size_t>(s_val + 2 * o_val)] == sigmoid(eta));
      }
  }
}

TEST_CASE("OA potential responses collapse to the two outcome scenarios") {
  ScenarioSpec spec = base_spec(ScenarioDagId::oa_external_pr);
  const TrialDataset data = generate(spec);
  CHECK(data.pa_arity() == PaArity::two);
  for (const auto& r : data.records()) REQUIRE(r.pa.size() == 2);
}

TEST_CASE("the O -> A coefficient drives the observed availability gap") {
  ScenarioSpec spec = base_spec(ScenarioDagId::oa_internal);
  spec.n = 100000;
  const TrialDataset data = generate(spec);
  std::int64_t n_o[2] = {0, 0}, a_o[2] = {0, 0};
  for (const auto& r : data.records()) {
    ++n_o[*r.o_true];
    a_o[*r.o_true] += r.a;
  }
  const double gap = static_cast<double>(a_o[1]) / n_o[1] - static_cast<double>(a_o[0]) / n_o[0];
  CHECK(gap > 0.0);  // o_on_a = 1.0
}

TEST_CASE("MAR data shows A independent of O given S and X (chi-square screen)") {
  ScenarioSpec spec = base_spec(ScenarioDagId::mar);
  spec.n = 100000;
  const TrialDataset data = generate(spec);
  // pool cells over (s, x) strata; within each, test A against o_true
  std::map<std::pair<int, int>, std::array<std::int64_t, 4>> tables;
  for (const auto& r : data.records()) {
    auto& cell = tables[{r.s, r.x[0]}];
    ++cell[static_cast<std::size_t>(r.a * 2 + *r.o_true)];
  }
  double stat = 0.0;
  double dof = 0.0;
  for (const auto& [key, cell] : tables) {
    const double n00 = cell[0], n01 = cell[1], n10 = cell[2], n11 = cell[3];
    const double n = n00 + n01 + n10 + n11;
    const double ra = (n10 + n11) / n, ro = (n01 + n11) / n;
    if (ra <= 0 || ra >= 1 || ro <= 0 || ro >= 1) continue;
    const double e00 = n * (1 - ra) * (1 - ro), e01 = n * (1 - ra) * ro;
    const double e10 = n * ra * (1 - ro), e11 = n * ra * ro;
    stat += (n00 - e00) * (n00 - e00) / e00 + (n01 - e01) * (n01 - e01) / e01 +
            (n10 - e10) * (n10 - e10) / e10 + (n11 - e11) * (n11 - e11) / e11;
    dof += 1.0;
  }
  REQUIRE(dof > 0.0);
  CHECK(chi2::sf(stat, dof) > 0.001);
}

TEST_CASE("SA-internal data shows A dependent on O within S, X (negative control)") {
  ScenarioSpec spec = base_spec(ScenarioDagId::sa_internal);
  spec.n = 100000;
  const TrialDataset data = generate(spec);
  std::map<std::pair<int, int>, std::array<std::int64_t, 4>> tables;
  for (const auto& r : data.records()) {
    auto& cell = tables[{r.s, r.x[0]}];
    ++cell[static_cast<std::size_t>(r.a * 2 + *r.o_true)];
  }
  double stat = 0.0, dof = 0.0;
  for (const auto& [key, cell] : tables) {
    const double n00 = cell[0], n01 = cell[1], n10 = cell[2], n11 = cell[3];
    const double n = n00 + n01 + n10 + n11;
    const double ra = (n10 + n11) / n, ro = (n01 + n11) / n;
    if (ra <= 0 || ra >= 1 || ro <= 0 || ro >= 1) continue;
    const double e00 = n * (1 - ra) * (1 - ro), e01 = n * (1 - ra) * ro;
    const double e10 = n * ra * (1 - ro), e11 = n * ra * ro;
    stat += (n00 - e00) * (n00 - e00) / e00 + (n01 - e01) * (n01 - e01) / e01 +
            (n10 - e10) * (n10 - e10) / e10 + (n11 - e11) * (n11 - e11) / e11;
    dof += 1.0;
  }
  REQUIRE(dof > 0.0);
  CHECK(chi2::sf(stat, dof) < 1e-6);
}

TEST_CASE("default adjustments follow the per-scenario corollary") {
  const std::vector<CovariateSpec> xs = {{"x1", {0.5, 0.5}}};
  CHECK(default_adjustment_for(ScenarioDagId::mcar, xs) == "");
  CHECK(default_adjustment_for(ScenarioDagId::mar, xs) == "x1,s");
  CHECK(default_adjustment_for(ScenarioDagId::oa_internal, xs) == "x1");
  CHECK(default_adjustment_for(ScenarioDagId::sa_internal, xs) == "x1,s");
  CHECK(default_adjustment_for(ScenarioDagId::oa_external_pr, xs) == "pa");
  CHECK(default_adjustment_for(ScenarioDagId::sa_external_pr, xs) == "pa,s");
}

TEST_CASE("elicitation noise perturbs the reported propensities within [0,1]") {
  ScenarioSpec noisy = base_spec(ScenarioDagId::sa_external_pr);
  noisy.n = 500;
  noisy.pa_noise = 0.3;
  // the trace keeps the exact pre-noise propensities for the same records
  GenerationTrace trace;
  const TrialDataset data = generate_traced(noisy, &trace);
  bool any_moved = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double reported = data.records()[i].pa[k];
      CHECK(reported >= 0.0);
      CHECK(reported <= 1.0);
      if (std::abs(reported - trace.potential_pa[i][k]) > 1e-12) any_moved = true;
    }
  }
  CHECK(any_moved);

  ScenarioSpec bad = noisy;
  bad.pa_noise = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("plain external mechanisms keep the confounder out of the record") {
  ScenarioSpec spec = base_spec(ScenarioDagId::oa_external);
  const TrialDataset data = generate(spec);
  CHECK(data.pa_arity() == PaArity::none);
  std::int64_t masked = 0;
  for (const auto& r : data.records()) {
    CHECK(r.pa.empty());
    masked += r.a == 0;
  }
  CHECK(masked > 0);
}

TEST_CASE("multiple covariates with distinct level counts flow end to end") {
  ScenarioSpec spec = base_spec(ScenarioDagId::sa_internal);
  spec.covariates = {{"x1", {0.5, 0.5}}, {"site", {0.3, 0.4, 0.3}}};
  spec.x_on_s = {0.5, 0.2};
  spec.x_on_o = {0.8, -0.3};
  spec.x_on_a = {-0.5, 0.3};
  spec.n = 4000;
  const TrialDataset data = generate(spec);
  CHECK(data.covariate_names() == std::vector<std::string>{"x1", "site"});
  int site_levels = 0;
  for (const auto& r : data.records()) site_levels = std::max(site_levels, r.x[1] + 1);
  CHECK(site_levels == 3);

  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse("x1,site,s"));
  CHECK(counts.stratum_count() <= 2 * 3 * 2);
  CHECK(counts.stratum_count() > 4);
  GapPolicy policy;
  const EstimateReport report = phi(counts, 1, policy);
  CHECK(report.point > 0.0);
  CHECK(report.point < 1.0);
}
