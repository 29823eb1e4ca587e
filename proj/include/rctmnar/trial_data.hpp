#ifndef RCTMNAR_TRIAL_DATA_HPP
#define RCTMNAR_TRIAL_DATA_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rctmnar {

// One row per patient. o_star is the observed outcome and is present exactly
// when a == 1. o_true exists only in simulated data and is never read by any
// estimator (estimators consume StratifiedCounts, which is built without it).
struct TrialRecord {
  int t = 0;                      // randomized treatment arm {0,1}
  int s = 0;                      // intercurrent-event indicator {0,1}
  int a = 1;                      // availability of the outcome {0,1}
  std::optional<int> o_star;      // observed outcome, present iff a == 1
  std::vector<int> x;             // categorical covariate codes
  std::vector<double> pa;         // elicited availability propensities, in [0,1]
  std::optional<int> o_true;      // simulation ground truth only
};

// Arity of the elicited potential-response propensity vector:
// two  -> (pA^0, pA^1)                 outcome-only scenarios
// four -> (pA^00, pA^10, pA^01, pA^11) (s,o)-indexed scenarios
enum class PaArity { none = 0, two = 2, four = 4 };

class TrialDataset {
 public:
  TrialDataset(std::vector<TrialRecord> records, std::vector<std::string> covariate_names,
               PaArity pa_arity);

  const std::vector<TrialRecord>& records() const { return records_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  PaArity pa_arity() const { return pa_arity_; }
  std::size_t size() const { return records_.size(); }
  bool has_o_true() const { return has_o_true_; }

  int covariate_index(const std::string& name) const;  // -1 when unknown

 private:
  std::vector<TrialRecord> records_;
  std::vector<std::string> covariate_names_;
  PaArity pa_arity_ = PaArity::none;
  bool has_o_true_ = false;
};

}  // namespace rctmnar

#endif
