#ifndef RCTMNAR_STRATIFIED_COUNTS_HPP
#define RCTMNAR_STRATIFIED_COUNTS_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rctmnar/trial_data.hpp"

namespace rctmnar {

enum class ScenarioDagId;  // dag.hpp

// Ordered tuple of categorical codes identifying one W-stratum. W may mix
// covariates, S, and discretized propensity components; the arity is fixed by
// the adjustment set used to build the counts.
struct StratumKey {
  std::vector<int> values;
  auto operator<=>(const StratumKey&) const = default;
};

std::string to_string(const StratumKey& key);

// One component of the adjustment set W.
struct AdjustmentComponent {
  enum class Kind { covariate, ice, pa_bins };
  Kind kind = Kind::covariate;
  std::string name;  // covariate name; ignored for ice / pa_bins

  static AdjustmentComponent covariate(std::string n) {
    return {Kind::covariate, std::move(n)};
  }
  static AdjustmentComponent ice() { return {Kind::ice, "s"}; }
  static AdjustmentComponent pa_bins() { return {Kind::pa_bins, "pa"}; }
};

struct AdjustmentSpec {
  std::vector<AdjustmentComponent> components;
  int pa_bin_count = 5;  // equal-width bins over [0,1], used when pa_bins present
  std::optional<ScenarioDagId> scenario_hint;

  bool has_pa() const;
  bool has_ice() const;
  // Parses "x1,s,pa" style component lists.
  static AdjustmentSpec parse(const std::string& text, int pa_bins = 5);
  std::string describe() const;
};

// Equal-width bin index over [0,1]; 1.0 falls in the top bin.
int pa_bin_index(double value, int bins);

// The six integer counts backing every probability query for one stratum:
// obs[t][o] = n(T=t, O*=o, A=1) and miss[t] = n(T=t, A=0).
struct StratumCells {
  std::array<std::array<std::int64_t, 2>, 2> obs{{{0, 0}, {0, 0}}};
  std::array<std::int64_t, 2> miss{0, 0};

  std::int64_t arm_total(int t) const { return obs[t][0] + obs[t][1] + miss[t]; }
  std::int64_t arm_observed(int t) const { return obs[t][0] + obs[t][1]; }
  std::int64_t observed_with_outcome(int o) const { return obs[0][o] + obs[1][o]; }
  std::int64_t observed_total() const { return arm_observed(0) + arm_observed(1); }
  std::int64_t total() const { return arm_total(0) + arm_total(1); }
};

// The closed query set used by the estimators. All probabilities are exact
// ratios of integer counts computed on demand; conditioning events with zero
// count yield "undefined" (nullopt), never an error.
struct ProbabilityQuery {
  enum class Kind {
    t_given_w,        // P(T=t | w)
    t_given_ostar_w,  // P(T=t | O*=o, w), implicitly A=1
    ostar_given_t_w,  // P(O*=o | T=t, w), implicitly A=1
    a_given_t_w,      // P(A=a | T=t, w)
    a_given_w,        // P(A=a | w)
    w_marginal,       // P(w)
    w_given_t,        // P(w | T=t)
    t_marginal,       // P(T=t)
  };
  Kind kind = Kind::t_marginal;
  int t = 0;
  int o = 0;
  int a = 0;
  StratumKey w;  // ignored for t_marginal
};

// Exact empirical joint counts over (T, O*, A, W-stratum). Immutable after
// construction; iteration order is the sorted key order, so everything built
// on top is deterministic.
class StratifiedCounts {
 public:
  static StratifiedCounts build(const TrialDataset& data, const AdjustmentSpec& adjustment);
  // Assembles counts directly from per-stratum cells (bootstrap resampling and
  // exact-distribution tests). Keys need not be pre-sorted.
  static StratifiedCounts from_cells(std::vector<std::pair<StratumKey, StratumCells>> cells,
                                     AdjustmentSpec adjustment);

  const std::vector<std::pair<StratumKey, StratumCells>>& strata() const { return strata_; }
  std::size_t stratum_count() const { return strata_.size(); }
  const StratumCells* find(const StratumKey& key) const;

  std::int64_t total() const { return total_; }
  std::int64_t arm_total(int t) const { return arm_totals_[t]; }
  const AdjustmentSpec& adjustment() const { return adjustment_; }

 private:
  StratifiedCounts() = default;
  std::vector<std::pair<StratumKey, StratumCells>> strata_;
  std::array<std::int64_t, 2> arm_totals_{0, 0};
  std::int64_t total_ = 0;
  AdjustmentSpec adjustment_;
};

StratifiedCounts build_counts(const TrialDataset& data, const AdjustmentSpec& adjustment);

std::optional<double> prob(const StratifiedCounts& counts, const ProbabilityQuery& query);

}  // namespace rctmnar

#endif
