#ifndef RCTMNAR_MONTECARLO_HPP
#define RCTMNAR_MONTECARLO_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rctmnar/estimators.hpp"
#include "rctmnar/scenario.hpp"

namespace rctmnar {

// Sweep grid: the base scenario is re-run for every (sample size, treatment
// impact) cell, `reps` replicates each. Replicate r of cell c draws its seed
// from derive_seed(derive_seed(base.seed, c), r), so results are independent
// of scheduling.
struct MonteCarloGrid {
  ScenarioSpec base;
  std::vector<std::int64_t> sample_sizes;
  std::vector<double> effects;  // values swept over effect_t_on_o
  int reps = 200;
  int pa_bins = 5;
  std::vector<std::string> estimators = {"naive", "mnar", "mnar_smooth"};
  GapPolicy policy;            // mnar policy; the smooth variant derives from it
  std::string adjustment;     // components list; empty means mechanism default
};

struct MonteCarloRow {
  std::int64_t n = 0;
  double effect = 0.0;
  std::string estimator;
  std::string estimand;  // p0 | p1 | ate | aclor
  double mean_bias = 0.0;
  double mean_abs_bias = 0.0;
  double ci_lo = 0.0;    // 2.5 percentile of the replicate biases
  double ci_hi = 0.0;    // 97.5 percentile
  double mean_bound_range = 0.0;  // mean aggregate bound-interval width
  double missing_prop_t0 = 0.0;
  double missing_prop_t1 = 0.0;
  int reps = 0;          // replicates with a defined estimate
};

struct MonteCarloResult {
  std::vector<MonteCarloRow> rows;
};

MonteCarloResult run_montecarlo(const MonteCarloGrid& grid, int jobs = 1);

// Percentile with linear interpolation (R type 7); `values` need not be sorted.
double percentile(std::vector<double> values, double q);

// Full-data comparator: counts built from o_true with no masking, so the
// sampled truth P^(O|T) and its adjusted log-odds ratio come out of the same
// estimator code paths.
StratifiedCounts full_data_counts(const TrialDataset& data, const AdjustmentSpec& adjustment);

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
  bool flagged = false;  // estimator undefined on more than half the resamples
  int defined = 0;
  int resamples = 0;
};

using CountsEstimator = std::function<std::optional<double>(const StratifiedCounts&)>;

// Percentile bootstrap over resampled datasets (rows drawn with replacement,
// size preserved; realized as a multinomial redraw of the count cells, which
// is distribution-identical because estimators are pure functions of counts).
BootstrapCi bootstrap_ci(const TrialDataset& data, const AdjustmentSpec& adjustment,
                         const CountsEstimator& estimator, int resamples, std::uint64_t seed);

}  // namespace rctmnar

#endif
