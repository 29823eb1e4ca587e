#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rctmnar/rng.hpp"
#include "rctmnar/stratified_counts.hpp"
#include "support/random_data.hpp"

using namespace rctmnar;

namespace {

TrialRecord make_record(int t, int s, int a, int o, std::vector<int> x = {},
                        std::vector<double> pa = {}) {
  TrialRecord r;
  r.t = t;
  r.s = s;
  r.a = a;
  if (a == 1) r.o_star = o;
  r.x = std::move(x);
  r.pa = std::move(pa);
  return r;
}

}  // namespace

TEST_CASE("records enforce the observed-outcome decomposition") {
  TrialRecord bad;
  bad.t = 1;
  bad.a = 0;
  bad.o_star = 1;  // outcome present while unavailable
  CHECK_THROWS_AS(TrialDataset({bad}, {}, PaArity::none), std::invalid_argument);

  TrialRecord good = make_record(1, 0, 0, 0);
  CHECK_NOTHROW(TrialDataset({good}, {}, PaArity::none));
  CHECK_THROWS_AS(TrialDataset({}, {}, PaArity::none), std::invalid_argument);

  TrialRecord bad_pa = make_record(0, 0, 1, 1, {}, {1.5, 0.2});
  CHECK_THROWS_AS(TrialDataset({bad_pa}, {}, PaArity::two), std::invalid_argument);
}

TEST_CASE("adjustment on one covariate partitions the records") {
  std::vector<TrialRecord> rows = {
      make_record(1, 0, 1, 1, {0}),
      make_record(0, 0, 1, 0, {1}),
      make_record(1, 1, 0, 0, {0}),
      make_record(0, 0, 1, 1, {1}),
  };
  TrialDataset data(rows, {"x1"}, PaArity::none);
  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse("x1"));
  REQUIRE(counts.stratum_count() == 2);
  std::int64_t total = 0;
  for (const auto& [key, cells] : counts.strata()) total += cells.total();
  CHECK(total == 4);
}

TEST_CASE("empty adjustment yields a single stratum") {
  std::vector<TrialRecord> rows = {make_record(1, 0, 1, 1, {0}), make_record(0, 1, 0, 0, {1})};
  TrialDataset data(rows, {"x1"}, PaArity::none);
  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse(""));
  CHECK(counts.stratum_count() == 1);
  CHECK(counts.strata().front().second.total() == 2);
}

TEST_CASE("equal-width pa binning matches the k/5 boundaries") {
  CHECK(pa_bin_index(0.31, 5) == 1);
  CHECK(pa_bin_index(0.0, 5) == 0);
  CHECK(pa_bin_index(0.19, 5) == 0);
  CHECK(pa_bin_index(0.2, 5) == 1);
  CHECK(pa_bin_index(0.999, 5) == 4);
  CHECK(pa_bin_index(1.0, 5) == 4);

  // 100 uniform pa values land in the bins their value dictates
  Rng rng(7);
  std::vector<TrialRecord> rows;
  for (int i = 0; i < 100; ++i)
    rows.push_back(make_record(i % 2, 0, 1, i % 2 == 0, {}, {rng.next_double(), rng.next_double()}));
  TrialDataset data(rows, {}, PaArity::two);
  AdjustmentSpec adj = AdjustmentSpec::parse("pa", 5);
  const StratifiedCounts counts = build_counts(data, adj);
  std::int64_t total = 0;
  for (const auto& [key, cells] : counts.strata()) {
    REQUIRE(key.values.size() == 2);
    CHECK(key.values[0] >= 0);
    CHECK(key.values[0] < 5);
    total += cells.total();
  }
  CHECK(total == 100);
  CHECK(counts.find(StratumKey{{pa_bin_index(rows[0].pa[0], 5), pa_bin_index(rows[0].pa[1], 5)}}) !=
        nullptr);
}

TEST_CASE("build_counts rejects unknown covariates and absent pa") {
  TrialDataset data({make_record(1, 0, 1, 1, {0})}, {"x1"}, PaArity::none);
  CHECK_THROWS_AS(build_counts(data, AdjustmentSpec::parse("nope")), std::invalid_argument);
  CHECK_THROWS_AS(build_counts(data, AdjustmentSpec::parse("pa")), std::invalid_argument);
}

TEST_CASE("prob returns exact ratios and undefined on zero-count conditioning") {
  // one stratum: n(T=1,O*=1,A=1)=3, n(T=0,O*=1,A=1)=1
  std::vector<TrialRecord> rows;
  for (int i = 0; i < 3; ++i) rows.push_back(make_record(1, 0, 1, 1));
  rows.push_back(make_record(0, 0, 1, 1));
  TrialDataset data(rows, {}, PaArity::none);
  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse(""));
  const StratumKey w{{}};

  ProbabilityQuery q;
  q.kind = ProbabilityQuery::Kind::t_given_ostar_w;
  q.t = 1;
  q.o = 1;
  q.w = w;
  CHECK(*prob(counts, q) == 0.75);

  q.o = 0;  // no O*=0 rows: conditioning event has zero count
  CHECK(!prob(counts, q).has_value());

  q.kind = ProbabilityQuery::Kind::t_marginal;
  q.t = 2;
  CHECK_THROWS_AS(prob(counts, q), std::invalid_argument);
}

TEST_CASE("all-equal cells give P(T=1|w) = 1/2") {
  StratumCells c;
  for (int t = 0; t < 2; ++t)
    for (int o = 0; o < 2; ++o) c.obs[t][o] = 3;
  c.miss = {3, 3};
  StratifiedCounts counts =
      StratifiedCounts::from_cells({{StratumKey{{0}}, c}}, AdjustmentSpec::parse("x1"));
  ProbabilityQuery q;
  q.kind = ProbabilityQuery::Kind::t_given_w;
  q.t = 1;
  q.w = StratumKey{{0}};
  CHECK(*prob(counts, q) == 0.5);
}

TEST_CASE("stratum probabilities sum to one") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    TrialDataset data = testgen::complete_dataset(rng, 150, 3);
    const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse("x1,s"));
    double sum_w = 0.0, sum_w_t0 = 0.0, sum_w_t1 = 0.0;
    for (const auto& [key, cells] : counts.strata()) {
      ProbabilityQuery q;
      q.w = key;
      q.kind = ProbabilityQuery::Kind::w_marginal;
      sum_w += *prob(counts, q);
      q.kind = ProbabilityQuery::Kind::w_given_t;
      q.t = 0;
      sum_w_t0 += *prob(counts, q);
      q.t = 1;
      sum_w_t1 += *prob(counts, q);
    }
    CHECK(std::abs(sum_w - 1.0) <= 1e-12);
    if (counts.arm_total(0) > 0) CHECK(std::abs(sum_w_t0 - 1.0) <= 1e-12);
    if (counts.arm_total(1) > 0) CHECK(std::abs(sum_w_t1 - 1.0) <= 1e-12);
  }
}

TEST_CASE("prob is a pure function of counts") {
  Rng rng(13);
  TrialDataset data = testgen::complete_dataset(rng, 80, 2);
  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse("x1"));
  ProbabilityQuery q;
  q.kind = ProbabilityQuery::Kind::t_given_w;
  q.t = 1;
  q.w = counts.strata().front().first;
  const auto first = prob(counts, q);
  for (int i = 0; i < 5; ++i) CHECK(prob(counts, q) == first);
}

TEST_CASE("one pa bin reproduces the pa-free stratification") {
  Rng rng(17);
  std::vector<TrialRecord> rows;
  for (int i = 0; i < 60; ++i) {
    TrialRecord r = make_record(static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2)),
                                static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2)),
                                {static_cast<int>(rng.below(2))},
                                {rng.next_double(), rng.next_double()});
    if (r.a == 0) r.o_star.reset();
    rows.push_back(r);
  }
  TrialDataset data(rows, {"x1"}, PaArity::two);

  const StratifiedCounts with_pa = build_counts(data, AdjustmentSpec::parse("x1,pa", 1));
  const StratifiedCounts without = build_counts(data, AdjustmentSpec::parse("x1"));
  REQUIRE(with_pa.stratum_count() == without.stratum_count());
  for (std::size_t i = 0; i < without.strata().size(); ++i) {
    const auto& [key_pa, cells_pa] = with_pa.strata()[i];
    const auto& [key, cells] = without.strata()[i];
    CHECK(key_pa.values[0] == key.values[0]);
    CHECK(cells_pa.obs == cells.obs);
    CHECK(cells_pa.miss == cells.miss);
  }
}

TEST_CASE("the availability and outcome query kinds are exact ratios too") {
  StratumCells c;
  c.obs[0][0] = 2;
  c.obs[0][1] = 1;
  c.obs[1][0] = 3;
  c.obs[1][1] = 6;
  c.miss = {2, 1};
  const StratumKey w{{0}};
  StratifiedCounts counts = StratifiedCounts::from_cells({{w, c}}, AdjustmentSpec::parse("x1"));

  ProbabilityQuery q;
  q.w = w;
  q.kind = ProbabilityQuery::Kind::ostar_given_t_w;
  q.t = 1;
  q.o = 1;
  CHECK(*prob(counts, q) == doctest::Approx(6.0 / 9.0));
  q.kind = ProbabilityQuery::Kind::a_given_t_w;
  q.a = 0;
  CHECK(*prob(counts, q) == doctest::Approx(1.0 / 10.0));
  q.kind = ProbabilityQuery::Kind::a_given_w;
  q.a = 1;
  CHECK(*prob(counts, q) == doctest::Approx(12.0 / 15.0));

  // unseen stratum: marginals are zero, conditionals undefined
  q.w = StratumKey{{9}};
  q.kind = ProbabilityQuery::Kind::w_marginal;
  CHECK(*prob(counts, q) == 0.0);
  q.kind = ProbabilityQuery::Kind::a_given_w;
  CHECK(!prob(counts, q).has_value());
}
