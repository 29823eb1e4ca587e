#include "rctmnar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "rctmnar/formulas.hpp"
#include "rctmnar/rng.hpp"

namespace rctmnar {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

StratifiedCounts full_data_counts(const TrialDataset& data, const AdjustmentSpec& adjustment) {
  if (!data.has_o_true())
    throw std::invalid_argument("full_data_counts requires o_true on every record");
  std::vector<TrialRecord> rows = data.records();
  for (TrialRecord& r : rows) {
    r.a = 1;
    r.o_star = r.o_true;
  }
  TrialDataset full(std::move(rows), data.covariate_names(), data.pa_arity());
  return build_counts(full, adjustment);
}

namespace {

// One replicate's estimates for every requested (estimator, estimand) pair,
// with the bound-interval width where the policy engaged bounds.
struct RepValues {
  // indexed by estimator name then estimand
  std::map<std::string, std::map<std::string, double>> estimate;
  std::map<std::string, std::map<std::string, double>> bound_range;
  double truth_p0 = 0.0, truth_p1 = 0.0, truth_aclor = 0.0;
  double miss0 = 0.0, miss1 = 0.0;
};

double report_width(const EstimateReport& r) {
  if (r.lower && r.upper) return *r.upper - *r.lower;
  return 0.0;
}

std::optional<double> marginal_log_or(const StratifiedCounts& counts) {
  const StratumCells pooled = pooled_cells(counts);
  // odds ratio of O* against T over all observed rows, no adjustment
  const auto theta = theta_contingency_value<double>(pooled);
  if (!theta) return std::nullopt;
  return std::log(*theta);
}

RepValues run_replicate(const MonteCarloGrid& grid, const ScenarioSpec& spec,
                        const AdjustmentSpec& adjustment, const AdjustmentSpec& mar_adjustment,
                        std::uint64_t rep_seed) {
  RepValues out;
  const TrialDataset data = generate(spec.with_seed(rep_seed));

  std::int64_t n_t[2] = {0, 0}, miss_t[2] = {0, 0};
  for (const auto& r : data.records()) {
    ++n_t[r.t];
    if (r.a == 0) ++miss_t[r.t];
  }
  out.miss0 = n_t[0] > 0 ? static_cast<double>(miss_t[0]) / static_cast<double>(n_t[0]) : 0.0;
  out.miss1 = n_t[1] > 0 ? static_cast<double>(miss_t[1]) / static_cast<double>(n_t[1]) : 0.0;

  const StratifiedCounts counts = build_counts(data, adjustment);
  const StratifiedCounts full = full_data_counts(data, adjustment);
  out.truth_p0 = naive_estimate(full, 0);
  out.truth_p1 = naive_estimate(full, 1);
  GapPolicy plain = grid.policy;
  plain.mode = GapMode::clip_to_bounds;
  plain.seed = rep_seed;
  GapPolicy smooth = grid.policy;
  smooth.mode = GapMode::smooth;
  smooth.seed = rep_seed;
  out.truth_aclor = aclor(full, ThetaMethod::logistic, plain).point;

  for (const std::string& est : grid.estimators) {
    auto& slot = out.estimate[est];
    auto& widths = out.bound_range[est];
    try {
      if (est == "naive") {
        slot["p0"] = naive_estimate(counts, 0);
        slot["p1"] = naive_estimate(counts, 1);
        slot["ate"] = slot["p1"] - slot["p0"];
        if (const auto lor = marginal_log_or(counts)) slot["aclor"] = *lor;
      } else if (est == "mnar" || est == "mnar_smooth") {
        const GapPolicy& policy = est == "mnar" ? plain : smooth;
        const EstimateReport r0 = phi(counts, 0, policy);
        const EstimateReport r1 = phi(counts, 1, policy);
        const EstimateReport rd = delta_ate(counts, policy);
        slot["p0"] = r0.point;
        slot["p1"] = r1.point;
        slot["ate"] = rd.point;
        widths["p0"] = report_width(r0);
        widths["p1"] = report_width(r1);
        widths["ate"] = report_width(rd);
        if (est == "mnar") slot["aclor"] = aclor(counts, ThetaMethod::logistic, plain).point;
      } else if (est == "mar") {
        const StratifiedCounts mar_counts = build_counts(data, mar_adjustment);
        slot["p0"] = mar_estimate(mar_counts, 0).point;
        slot["p1"] = mar_estimate(mar_counts, 1).point;
        slot["ate"] = slot["p1"] - slot["p0"];
      } else {
        throw std::invalid_argument("unknown estimator in grid: " + est);
      }
    } catch (const EstimationError&) {
      // leave the missing entries out; aggregation counts defined replicates
    }
  }
  return out;
}

}  // namespace

MonteCarloResult run_montecarlo(const MonteCarloGrid& grid, int jobs) {
  if (grid.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (grid.sample_sizes.empty() || grid.effects.empty())
    throw std::invalid_argument("grid must contain at least one cell");
  if (jobs < 1) jobs = 1;

  MonteCarloResult result;
  const std::vector<std::string> estimands = {"p0", "p1", "ate", "aclor"};

  std::size_t cell_index = 0;
  for (std::int64_t n : grid.sample_sizes) {
    for (double effect : grid.effects) {
      ScenarioSpec spec = grid.base;
      spec.n = n;
      spec.effect_t_on_o = effect;
      AdjustmentSpec adjustment = AdjustmentSpec::parse(
          grid.adjustment.empty() ? default_adjustment_for(spec.mechanism, spec.covariates)
                                  : grid.adjustment,
          grid.pa_bins);
      adjustment.scenario_hint = spec.mechanism;
      AdjustmentSpec mar_adjustment = AdjustmentSpec::parse(
          default_adjustment_for(ScenarioDagId::mar, spec.covariates), grid.pa_bins);

      const std::uint64_t cell_seed = derive_seed(grid.base.seed, cell_index);
      std::vector<RepValues> reps(static_cast<std::size_t>(grid.reps));

      auto worker = [&](int first, int step) {
        for (int r = first; r < grid.reps; r += step)
          reps[static_cast<std::size_t>(r)] = run_replicate(
              grid, spec, adjustment, mar_adjustment,
              derive_seed(cell_seed, static_cast<std::uint64_t>(r)));
      };
      if (jobs == 1) {
        worker(0, 1);
      } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j, jobs);
        for (auto& th : pool) th.join();
      }

      double miss0 = 0.0, miss1 = 0.0;
      for (const auto& rv : reps) {
        miss0 += rv.miss0;
        miss1 += rv.miss1;
      }
      miss0 /= static_cast<double>(grid.reps);
      miss1 /= static_cast<double>(grid.reps);

      for (const std::string& est : grid.estimators) {
        for (const std::string& estimand : estimands) {
          std::vector<double> biases;
          double width_sum = 0.0;
          int width_count = 0;
          for (const auto& rv : reps) {
            const auto est_it = rv.estimate.find(est);
            if (est_it == rv.estimate.end()) continue;
            const auto val_it = est_it->second.find(estimand);
            if (val_it == est_it->second.end()) continue;
            double truth = 0.0;
            if (estimand == "p0") truth = rv.truth_p0;
            else if (estimand == "p1") truth = rv.truth_p1;
            else if (estimand == "ate") truth = rv.truth_p1 - rv.truth_p0;
            else truth = rv.truth_aclor;
            biases.push_back(val_it->second - truth);
            const auto wr_it = rv.bound_range.find(est);
            if (wr_it != rv.bound_range.end()) {
              const auto w_it = wr_it->second.find(estimand);
              if (w_it != wr_it->second.end()) {
                width_sum += w_it->second;
                ++width_count;
              }
            }
          }
          if (biases.empty()) continue;
          MonteCarloRow row;
          row.n = n;
          row.effect = effect;
          row.estimator = est;
          row.estimand = estimand;
          row.reps = static_cast<int>(biases.size());
          double mean = 0.0, mean_abs = 0.0;
          for (double b : biases) {
            mean += b;
            mean_abs += std::abs(b);
          }
          row.mean_bias = mean / static_cast<double>(biases.size());
          row.mean_abs_bias = mean_abs / static_cast<double>(biases.size());
          row.ci_lo = percentile(biases, 0.025);
          row.ci_hi = percentile(biases, 0.975);
          row.mean_bound_range = width_count > 0 ? width_sum / width_count : 0.0;
          row.missing_prop_t0 = miss0;
          row.missing_prop_t1 = miss1;
          result.rows.push_back(row);
        }
      }
      ++cell_index;
    }
  }
  return result;
}

BootstrapCi bootstrap_ci(const TrialDataset& data, const AdjustmentSpec& adjustment,
                         const CountsEstimator& estimator, int resamples, std::uint64_t seed) {
  if (resamples < 2) throw std::invalid_argument("bootstrap requires at least 2 resamples");
  const StratifiedCounts counts = build_counts(data, adjustment);

  // Flatten the table into cells so each resample is one multinomial draw.
  std::vector<std::int64_t> weights;
  weights.reserve(counts.stratum_count() * 6);
  for (const auto& [key, c] : counts.strata()) {
    weights.push_back(c.obs[0][0]);
    weights.push_back(c.obs[0][1]);
    weights.push_back(c.obs[1][0]);
    weights.push_back(c.obs[1][1]);
    weights.push_back(c.miss[0]);
    weights.push_back(c.miss[1]);
  }

  Rng rng(derive_seed(seed, 0xb007u));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    const auto draw = multinomial(rng, counts.total(), weights);
    std::vector<std::pair<StratumKey, StratumCells>> cells;
    cells.reserve(counts.stratum_count());
    std::size_t pos = 0;
    for (const auto& [key, c] : counts.strata()) {
      StratumCells fresh;
      fresh.obs[0][0] = draw[pos + 0];
      fresh.obs[0][1] = draw[pos + 1];
      fresh.obs[1][0] = draw[pos + 2];
      fresh.obs[1][1] = draw[pos + 3];
      fresh.miss[0] = draw[pos + 4];
      fresh.miss[1] = draw[pos + 5];
      pos += 6;
      if (fresh.total() > 0) cells.emplace_back(key, fresh);
    }
    const StratifiedCounts resampled =
        StratifiedCounts::from_cells(std::move(cells), counts.adjustment());
    if (const auto value = estimator(resampled)) values.push_back(*value);
  }

  BootstrapCi ci;
  ci.resamples = resamples;
  ci.defined = static_cast<int>(values.size());
  ci.flagged = ci.defined * 2 < resamples;
  if (!values.empty()) {
    ci.lo = percentile(values, 0.025);
    ci.hi = percentile(values, 0.975);
  }
  return ci;
}

}  // namespace rctmnar
