#include "rctmnar/robustify.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rctmnar/formulas.hpp"
#include "rctmnar/rng.hpp"

namespace rctmnar {

const char* to_string(GapMode m) {
  switch (m) {
    case GapMode::bounds_midpoint: return "bounds_midpoint";
    case GapMode::clip_to_bounds: return "clip_to_bounds";
    case GapMode::smooth: return "smooth";
    case GapMode::skip_renormalize: return "skip_renormalize";
  }
  return "?";
}

const char* to_string(FallbackKind f) {
  switch (f) {
    case FallbackKind::naive: return "naive";
    case FallbackKind::midpoint: return "midpoint";
    case FallbackKind::mar: return "mar";
  }
  return "?";
}

const char* to_string(PsMethod m) {
  return m == PsMethod::analytic ? "analytic" : "bootstrap";
}

GapMode gap_mode_from_string(const std::string& s) {
  for (GapMode m : {GapMode::bounds_midpoint, GapMode::clip_to_bounds, GapMode::smooth,
                    GapMode::skip_renormalize})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown gap policy mode: " + s);
}

FallbackKind fallback_from_string(const std::string& s) {
  for (FallbackKind f : {FallbackKind::naive, FallbackKind::midpoint, FallbackKind::mar})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown fallback: " + s);
}

PsMethod ps_method_from_string(const std::string& s) {
  for (PsMethod m : {PsMethod::analytic, PsMethod::bootstrap})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown ps method: " + s);
}

namespace {

const StratumCells& require_stratum(const StratifiedCounts& counts, const StratumKey& w) {
  const StratumCells* c = counts.find(w);
  if (!c) throw std::invalid_argument("unknown stratum " + to_string(w));
  return *c;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

BoundInterval rho_bounds(const StratumCells& cells, int t) {
  const std::int64_t arm = cells.arm_total(t);
  if (arm == 0) throw std::invalid_argument("rho_bounds on empty arm-stratum");
  const double p_miss = static_cast<double>(cells.miss[t]) / static_cast<double>(arm);
  const std::int64_t observed = cells.arm_observed(t);
  double lb = 0.0;
  if (observed > 0) {
    const double p_o = static_cast<double>(cells.obs[t][1]) / static_cast<double>(observed);
    const double p_a1 = static_cast<double>(observed) / static_cast<double>(arm);
    lb = p_o * p_a1;
  }
  // With no observed outcomes, P(O|T,A=1,w) spans [0,1]: lb stays 0 and the
  // width below is P^(A=0|T,w) = 1.
  BoundInterval iv;
  iv.lb = lb;
  iv.ub = lb + p_miss;
  iv.source = BoundInterval::Source::rho_bounds;
  return iv;
}

BoundInterval rho_bounds(const StratifiedCounts& counts, const StratumKey& w, int t) {
  return rho_bounds(require_stratum(counts, w), t);
}

BoundInterval ate_bounds(const StratifiedCounts& counts, const StratumKey& w) {
  const StratumCells& cells = require_stratum(counts, w);
  if (cells.arm_total(0) == 0 || cells.arm_total(1) == 0)
    throw std::invalid_argument("ate_bounds requires both arms in stratum " + to_string(w));

  BoundInterval iv;
  iv.source = BoundInterval::Source::ate_bounds;

  const auto d0 = delta0_value<double>(cells, counts.arm_total(1), counts.total());
  if (d0) {
    // Bound rho_0 = P(O|w) through P(O|A=1,w)P(A=1|w) <= P(O|w) <= ... + P(A=0|w),
    // then scale by delta_0 * P^(w); the sign of delta_0 picks the orientation.
    const double n_w = static_cast<double>(cells.total());
    const double p_w = n_w / static_cast<double>(counts.total());
    const double p_a0 = static_cast<double>(cells.miss[0] + cells.miss[1]) / n_w;
    double r_lb = 0.0;
    if (cells.observed_total() > 0) {
      const double p_o_obs = static_cast<double>(cells.observed_with_outcome(1)) /
                             static_cast<double>(cells.observed_total());
      r_lb = p_o_obs * (1.0 - p_a0);
    }
    const double r_ub = r_lb + p_a0;
    const double a = *d0 * r_lb * p_w;
    const double b = *d0 * r_ub * p_w;
    iv.lb = std::min(a, b);
    iv.ub = std::max(a, b);
    return iv;
  }

  // P^(T=1|O*=1,w) not computable: combine per-arm rho bounds with the global
  // arm weights P^(w|T=t).
  const BoundInterval b1 = rho_bounds(cells, 1);
  const BoundInterval b0 = rho_bounds(cells, 0);
  const double w1 = static_cast<double>(cells.arm_total(1)) / static_cast<double>(counts.arm_total(1));
  const double w0 = static_cast<double>(cells.arm_total(0)) / static_cast<double>(counts.arm_total(0));
  iv.lb = b1.lb * w1 - b0.ub * w0;
  iv.ub = b1.ub * w1 - b0.lb * w0;
  return iv;
}

PositivityStatus positivity_check(const StratumCells& cells) {
  if (lacks_outcome_levels(cells)) return PositivityStatus::lack_of_data;
  if (equal_treatment_split(cells)) return PositivityStatus::equal_impact;
  return PositivityStatus::ok;
}

PositivityStatus positivity_check(const StratifiedCounts& counts, const StratumKey& w, int) {
  const StratumCells* c = counts.find(w);
  if (!c) return PositivityStatus::lack_of_data;
  return positivity_check(*c);
}

double sign_stability(const StratumCells& cells, int t, const GapPolicy& policy) {
  const std::int64_t n1 = cells.observed_with_outcome(1);
  const std::int64_t n0 = cells.observed_with_outcome(0);
  if (n1 == 0 || n0 == 0) return 0.5;
  const double p1 = static_cast<double>(cells.obs[t][1]) / static_cast<double>(n1);
  const double p0 = static_cast<double>(cells.obs[t][0]) / static_cast<double>(n0);
  const double delta_hat = p1 - p0;
  if (delta_hat == 0.0) return 0.5;

  if (policy.ps_method == PsMethod::analytic) {
    const double pooled = static_cast<double>(cells.obs[t][1] + cells.obs[t][0]) /
                          static_cast<double>(n1 + n0);
    const double se2 = pooled * (1.0 - pooled) *
                       (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n0));
    if (se2 <= 0.0) return 1.0;
    return standard_normal_cdf(std::abs(delta_hat) / std::sqrt(se2));
  }

  // Bootstrap: resample the stratum's rows (via its count cells) B times and
  // score sign agreement of the recomputed split; an undefined or exactly
  // zero resampled split contributes half.
  const std::vector<std::int64_t> weights = {cells.obs[0][0], cells.obs[0][1], cells.obs[1][0],
                                             cells.obs[1][1], cells.miss[0], cells.miss[1]};
  const std::int64_t total = cells.total();
  Rng rng(derive_seed(policy.seed, 0x5157u));
  double score = 0.0;
  const int b_count = policy.resamples < 1 ? 1 : policy.resamples;
  for (int b = 0; b < b_count; ++b) {
    const auto draw = multinomial(rng, total, weights);
    const std::int64_t m1 = draw[1] + draw[3];  // observed O*=1
    const std::int64_t m0 = draw[0] + draw[2];  // observed O*=0
    if (m1 == 0 || m0 == 0) {
      score += 0.5;
      continue;
    }
    const std::int64_t obs_t_o1 = (t == 1) ? draw[3] : draw[1];
    const std::int64_t obs_t_o0 = (t == 1) ? draw[2] : draw[0];
    const double d = static_cast<double>(obs_t_o1) / static_cast<double>(m1) -
                     static_cast<double>(obs_t_o0) / static_cast<double>(m0);
    if (d == 0.0)
      score += 0.5;
    else if ((d > 0.0) == (delta_hat > 0.0))
      score += 1.0;
  }
  return score / static_cast<double>(b_count);
}

namespace {

// Low-variance stand-in R for the smoothing mix.
std::optional<double> fallback_value(const StratumCells& cells, int t, FallbackKind kind) {
  switch (kind) {
    case FallbackKind::naive:
    case FallbackKind::mar: {
      // Observed outcome rate in the arm-stratum. With S part of W this is
      // exactly the stratified MAR term for the stratum, hence the alias.
      const std::int64_t observed = cells.arm_observed(t);
      if (observed == 0) return std::nullopt;
      return static_cast<double>(cells.obs[t][1]) / static_cast<double>(observed);
    }
    case FallbackKind::midpoint: {
      if (cells.arm_total(t) == 0) return std::nullopt;
      return rho_bounds(cells, t).midpoint();
    }
  }
  return std::nullopt;
}

}  // namespace

SmoothedRho smoothed_rho(const StratifiedCounts& counts, const StratumKey& w, int t,
                         const GapPolicy& policy) {
  const StratumCells& cells = require_stratum(counts, w);
  SmoothedRho out;
  const auto rho = rho_value<double>(cells, t);
  const auto fb = fallback_value(cells, t, policy.fallback);
  if (!rho || !fb) {
    out.value = rho_bounds(cells, t).midpoint();
    out.q_s = 0.5;
    out.used_fallback_only = true;
    return out;
  }
  const double p_s = sign_stability(cells, t, policy);
  out.q_s = std::max(0.5, p_s);
  out.value = smooth_mix<double>(*rho, *fb, out.q_s);
  return out;
}

std::optional<std::string> unidentifiability_warning(const EstimateReport& report,
                                                     double threshold) {
  double total_weight = 0.0;
  double fragile_weight = 0.0;
  for (const auto& d : report.strata) {
    total_weight += d.weight;
    if (d.status == PositivityStatus::equal_impact) fragile_weight += d.weight;
  }
  const double fraction = total_weight > 0.0 ? fragile_weight / total_weight : 0.0;
  // pooled_sign_stability < 0.975 is a two-sided 5% test failing to reject a
  // null observed association between T and O* across all observed rows.
  const bool pooled_null = report.flags.pooled_sign_stability < 0.975;
  if (fraction <= threshold && !pooled_null) return std::nullopt;
  std::ostringstream msg;
  if (fraction > threshold)
    msg << "equal observed treatment impact in " << fraction * 100.0 << "% of the stratum weight";
  if (pooled_null) {
    if (fraction > threshold) msg << " and ";
    msg << "the pooled observed association between treatment and outcome is "
           "indistinguishable from null";
  }
  msg << "; if the treatment has no effect on the outcome, P(O|T) is not identifiable "
         "from observed data without further assumptions";
  return msg.str();
}

StratumCells pooled_cells(const StratifiedCounts& counts) {
  StratumCells pooled;
  for (const auto& [key, c] : counts.strata()) {
    for (int t = 0; t < 2; ++t) {
      pooled.obs[t][0] += c.obs[t][0];
      pooled.obs[t][1] += c.obs[t][1];
      pooled.miss[t] += c.miss[t];
    }
  }
  return pooled;
}

}  // namespace rctmnar
