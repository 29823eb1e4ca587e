#ifndef RCTMNAR_SCENARIO_HPP
#define RCTMNAR_SCENARIO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rctmnar/dag.hpp"
#include "rctmnar/trial_data.hpp"

namespace rctmnar {

struct CovariateSpec {
  std::string name;
  std::vector<double> probs;  // marginal probabilities, one per level

  int levels() const { return static_cast<int>(probs.size()); }
};

// Generative parameters for one missingness mechanism. All structural
// equations are logistic in their parents; a categorical variable enters as
// coefficient * level index. Coefficients into A that the mechanism's DAG
// forbids must be zero (checked by validate()).
struct ScenarioSpec {
  ScenarioDagId mechanism = ScenarioDagId::mcar;
  std::int64_t n = 1000;
  double p_treat = 0.5;

  std::vector<CovariateSpec> covariates;
  CovariateSpec u{"u", {1.0}};  // unobserved; single level means "absent"

  // S model: logit P(S=1) = intercept_s + t_on_s T + x_on_s.X + u_on_s U
  double intercept_s = 0.0;
  double effect_t_on_s = 0.0;
  std::vector<double> x_on_s;
  double u_on_s = 0.0;

  // O model: logit P(O=1) = intercept_o + t_on_o T + s_on_o S + x_on_o.X
  //                          + tx_on_o.(T*X) + u_on_o U
  double intercept_o = 0.0;
  double effect_t_on_o = 0.0;
  double effect_s_on_o = 0.0;
  std::vector<double> x_on_o;
  std::vector<double> tx_on_o;  // treatment-by-covariate effect modification
  double u_on_o = 0.0;

  // A model: logit P(A=1) = intercept_a + o_on_a O + s_on_a S + x_on_a.X + u_on_a U
  double intercept_a = 2.0;
  double o_on_a = 0.0;
  double s_on_a = 0.0;
  std::vector<double> x_on_a;
  double u_on_a = 0.0;

  // Optional multiplicative noise on the reported propensities (off by
  // default; the reference experiments elicit exact values).
  double pa_noise = 0.0;

  std::uint64_t seed = 0;

  PaArity pa_arity() const;
  void validate() const;  // throws std::invalid_argument on violations
  ScenarioSpec with_seed(std::uint64_t s) const {
    ScenarioSpec copy = *this;
    copy.seed = s;
    return copy;
  }
};

// Per-record generation internals, exposed for analytic verification: the
// latent confounder level, the four potential availability draws, and the
// exact propensities used. Estimators never see any of this.
struct GenerationTrace {
  std::vector<int> u_level;
  std::vector<std::array<int, 4>> potential_a;      // A^{so} draw at index s + 2*o
  std::vector<std::array<double, 4>> potential_pa;  // pA^{so} = P(A^{so}=1 | U, X)
};

TrialDataset generate(const ScenarioSpec& spec);
TrialDataset generate_traced(const ScenarioSpec& spec, GenerationTrace* trace);

// The sufficient adjustment set for a mechanism (best effort for the plain
// external scenarios, where no observed set is sufficient).
std::string default_adjustment_for(ScenarioDagId mechanism,
                                   const std::vector<CovariateSpec>& covariates);

}  // namespace rctmnar

#endif
