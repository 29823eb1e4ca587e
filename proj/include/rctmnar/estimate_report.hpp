#ifndef RCTMNAR_ESTIMATE_REPORT_HPP
#define RCTMNAR_ESTIMATE_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "rctmnar/stratified_counts.hpp"

namespace rctmnar {

enum class Estimand { p_outcome_t0, p_outcome_t1, ate, aclor };

const char* to_string(Estimand e);

// Evaluability of the stratum's identification ratio.
enum class PositivityStatus { ok, lack_of_data, equal_impact };

const char* to_string(PositivityStatus s);

struct BoundInterval {
  enum class Source { rho_bounds, ate_bounds };
  double lb = 0.0;
  double ub = 0.0;
  Source source = Source::rho_bounds;

  double midpoint() const { return (lb + ub) / 2.0; }
  double width() const { return ub - lb; }
  double clamp(double v) const { return v < lb ? lb : (v > ub ? ub : v); }
};

struct StratumDetail {
  StratumKey key;
  std::optional<double> raw;    // rho (or log theta) before gap handling
  double resolved = 0.0;        // value that entered the weighted sum
  double weight = 0.0;          // P^(w|T=t) for Phi, P^(w) for Delta / AC-LOR
  PositivityStatus status = PositivityStatus::ok;
  bool gap_filled = false;      // bounds or fallback stood in for rho
  bool clipped = false;         // evaluable value clamped into the bounds
  bool skipped = false;         // dropped by skip_renormalize; weight excluded
  double q_s = 1.0;             // sign-stability weight when smoothing ran
  std::optional<BoundInterval> bounds;
};

struct ReportFlags {
  bool positivity_violation = false;  // some stratum hit case (A) or (B)
  bool equal_impact = false;          // specifically case (B) somewhere
  bool clipped_to_bounds = false;
  bool smoothed = false;
  double smoothing_weight = 1.0;      // weighted mean q_s over strata
  bool logistic_nonconverged = false;
  bool skipped_strata = false;        // skip_renormalize dropped some weight
  // Sign-stability of the pooled observed T/O* split; near 1/2 means the
  // observed association is statistically indistinguishable from null.
  double pooled_sign_stability = 1.0;
};

struct EstimateReport {
  Estimand estimand = Estimand::p_outcome_t1;
  double point = 0.0;
  std::optional<double> lower;  // aggregate bound interval, when bounding engaged
  std::optional<double> upper;
  std::optional<std::pair<double, double>> ci;  // bootstrap 2.5% / 97.5%
  std::vector<StratumDetail> strata;
  ReportFlags flags;
  std::vector<std::string> warnings;
};

}  // namespace rctmnar

#endif
