#ifndef RCTMNAR_ROBUSTIFY_HPP
#define RCTMNAR_ROBUSTIFY_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "rctmnar/estimate_report.hpp"
#include "rctmnar/stratified_counts.hpp"

namespace rctmnar {

// How a weighted estimator resolves strata whose rho term cannot be evaluated
// (and, with clipping, evaluable values that escape the identified region).
enum class GapMode { bounds_midpoint, clip_to_bounds, smooth, skip_renormalize };

// Low-variance stand-in R mixed into the smoothed estimator. `naive` and
// `mar` both evaluate the stratum's observed rate P^(O*|T,w,A=1); `midpoint`
// is the centre of the tight bounds.
enum class FallbackKind { naive, midpoint, mar };

enum class PsMethod { analytic, bootstrap };

struct GapPolicy {
  GapMode mode = GapMode::clip_to_bounds;
  FallbackKind fallback = FallbackKind::midpoint;
  int resamples = 200;                   // B for the bootstrap p_s variant
  PsMethod ps_method = PsMethod::analytic;
  bool clip = true;                      // clamp evaluable values into bounds
  std::uint64_t seed = 0;                // RNG stream for bootstrap p_s

  bool clipping_enabled() const { return clip || mode == GapMode::clip_to_bounds; }
};

const char* to_string(GapMode m);
const char* to_string(FallbackKind f);
const char* to_string(PsMethod m);
GapMode gap_mode_from_string(const std::string& s);
FallbackKind fallback_from_string(const std::string& s);
PsMethod ps_method_from_string(const std::string& s);

// Tight bounds on P(O|T=t,w):
//   lb = P^(O*|T,A=1,w) P^(A=1|T,w),  ub = lb + P^(A=0|T,w).
// With no observed outcomes in the arm-stratum the unknown factor spans
// [0,1], giving lb=0, ub=P^(A=0|T,w). Throws on an empty arm-stratum.
BoundInterval rho_bounds(const StratifiedCounts& counts, const StratumKey& w, int t);
BoundInterval rho_bounds(const StratumCells& cells, int t);

// Bounds on the stratum's ATE contribution. When P^(T=1|O*=1,w) is
// computable, bounds delta_0(w) * rho_0(w) * P^(w) through the P(O|w)
// decomposition (orientation follows the sign of delta_0); otherwise falls
// back to the arm-weighted difference of the per-arm rho bounds.
BoundInterval ate_bounds(const StratifiedCounts& counts, const StratumKey& w);

// Evaluability classification for rho in the stratum.
PositivityStatus positivity_check(const StratifiedCounts& counts, const StratumKey& w, int t);
PositivityStatus positivity_check(const StratumCells& cells);

// Probability that the observed split delta^ = P^(T|O*,w) - P^(T|not O*,w)
// keeps its sign under resampling. Analytic: pooled two-proportion normal
// approximation; bootstrap: within-stratum multinomial resampling.
double sign_stability(const StratumCells& cells, int t, const GapPolicy& policy);

struct SmoothedRho {
  double value = 0.0;
  double q_s = 1.0;
  bool used_fallback_only = false;  // rho or R unavailable; bounds midpoint used
};

// rho~ = (2 q_s - 1) rho + 2 (1 - q_s) R with q_s = max(1/2, p_s).
SmoothedRho smoothed_rho(const StratifiedCounts& counts, const StratumKey& w, int t,
                         const GapPolicy& policy);

// Unidentifiability diagnostic: fires when more than `threshold` of
// the stratum weight is equal-impact, or the pooled observed association is
// statistically null (report.flags.pooled_sign_stability below the two-sided
// 5% level). Never modifies the estimate.
std::optional<std::string> unidentifiability_warning(const EstimateReport& report,
                                                     double threshold = 0.5);

// Sum of all stratum cells (the W-free margin of the table).
StratumCells pooled_cells(const StratifiedCounts& counts);

}  // namespace rctmnar

#endif
