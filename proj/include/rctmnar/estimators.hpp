#ifndef RCTMNAR_ESTIMATORS_HPP
#define RCTMNAR_ESTIMATORS_HPP

#include <optional>
#include <stdexcept>

#include "rctmnar/estimate_report.hpp"
#include "rctmnar/robustify.hpp"
#include "rctmnar/stratified_counts.hpp"

namespace rctmnar {

// Estimation is structurally impossible on this input (empty arm, degenerate
// randomization, every stratum undefined). Distinct from invalid_argument so
// the CLI can map it to its own exit code.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stratum-level identification ratios; undefined is a value.
std::optional<double> rho0(const StratifiedCounts& counts, const StratumKey& w, int t);
std::optional<double> rho(const StratifiedCounts& counts, const StratumKey& w, int t);

// Phi estimator of P(O|T=t): weighted sum of per-stratum rho with weights
// P^(w|T=t); non-evaluable strata resolved by the gap policy.
EstimateReport phi(const StratifiedCounts& counts, int t, const GapPolicy& policy);

// Delta estimator of the ATE: sum of delta_0(w) rho_0(w) P^(w). The design
// randomization probability replaces P^(T=1) when supplied.
EstimateReport delta_ate(const StratifiedCounts& counts, const GapPolicy& policy,
                         std::optional<double> design_p_treat = std::nullopt);

enum class ThetaMethod { contingency, logistic };

const char* to_string(ThetaMethod m);
ThetaMethod theta_method_from_string(const std::string& s);

struct ThetaResult {
  std::optional<double> value;  // odds-ratio scale
  bool converged = true;        // logistic IRLS status
};

// Odds ratio between O* and T within one stratum. The contingency route is
// the exact cell cross-product (undefined on zero cells); the logistic route
// fits outcome-on-treatment with a per-stratum saturated design by ridge
// IRLS, so small strata still yield finite probabilities.
ThetaResult theta_stratum(const StratifiedCounts& counts, const StratumKey& w, ThetaMethod method);

// Average conditional log-odds ratio: sum of log theta(P^_w) P^(w). With the
// contingency method, undefined strata are skipped and weights renormalized,
// or patched with the Haldane-Anscombe +0.5 correction when enabled.
EstimateReport aclor(const StratifiedCounts& counts, ThetaMethod method, const GapPolicy& policy,
                     bool haldane_correction = false);

// MAR estimator (stratified available-case average); requires counts over [X, S].
EstimateReport mar_estimate(const StratifiedCounts& counts, int t);

// Available-case baseline P^(O*|T=t, A=1), ignoring missingness.
double naive_estimate(const StratifiedCounts& counts, int t);

}  // namespace rctmnar

#endif
