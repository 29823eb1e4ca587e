#include "rctmnar/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "rctmnar/formulas.hpp"

namespace rctmnar {

std::optional<double> rho0(const StratifiedCounts& counts, const StratumKey& w, int t) {
  const StratumCells* c = counts.find(w);
  if (!c) return std::nullopt;
  return rho0_value<double>(*c, t);
}

std::optional<double> rho(const StratifiedCounts& counts, const StratumKey& w, int t) {
  const StratumCells* c = counts.find(w);
  if (!c) return std::nullopt;
  return rho_value<double>(*c, t);
}

namespace {

void finalize_flags(EstimateReport& report, const StratifiedCounts& counts) {
  GapPolicy analytic;
  analytic.ps_method = PsMethod::analytic;
  report.flags.pooled_sign_stability = sign_stability(pooled_cells(counts), 1, analytic);
  if (auto warning = unidentifiability_warning(report)) report.warnings.push_back(*warning);
}

double weighted_mean_qs(const std::vector<StratumDetail>& strata) {
  double wsum = 0.0, acc = 0.0;
  for (const auto& d : strata) {
    wsum += d.weight;
    acc += d.weight * d.q_s;
  }
  return wsum > 0.0 ? acc / wsum : 1.0;
}

}  // namespace

EstimateReport phi(const StratifiedCounts& counts, int t, const GapPolicy& policy) {
  if (counts.arm_total(t) == 0)
    throw EstimationError("phi: treatment arm " + std::to_string(t) + " is empty");

  EstimateReport report;
  report.estimand = t == 1 ? Estimand::p_outcome_t1 : Estimand::p_outcome_t0;

  const double arm = static_cast<double>(counts.arm_total(t));
  double point = 0.0, lower = 0.0, upper = 0.0;
  double included_weight = 0.0;
  bool bounding_engaged = false;

  for (const auto& [key, cells] : counts.strata()) {
    if (cells.arm_total(t) == 0) continue;  // P^(w, T=t) = 0
    StratumDetail d;
    d.key = key;
    d.weight = static_cast<double>(cells.arm_total(t)) / arm;
    d.status = positivity_check(cells);
    d.raw = rho_value<double>(cells, t);
    const BoundInterval iv = rho_bounds(cells, t);
    d.bounds = iv;

    bool skip = false;
    if (d.raw) {
      d.resolved = *d.raw;
      if (policy.mode == GapMode::smooth) {
        const SmoothedRho sm = smoothed_rho(counts, key, t, policy);
        d.resolved = sm.value;
        d.q_s = sm.q_s;
      }
    } else {
      switch (policy.mode) {
        case GapMode::skip_renormalize:
          skip = true;
          report.flags.skipped_strata = true;
          break;
        case GapMode::smooth: {
          const SmoothedRho sm = smoothed_rho(counts, key, t, policy);
          d.resolved = sm.value;
          d.q_s = sm.q_s;
          d.gap_filled = true;
          break;
        }
        case GapMode::bounds_midpoint:
        case GapMode::clip_to_bounds:
          d.resolved = iv.midpoint();
          d.gap_filled = true;
          break;
      }
    }
    if (!skip && policy.clipping_enabled() && (d.resolved < iv.lb || d.resolved > iv.ub)) {
      d.resolved = iv.clamp(d.resolved);
      d.clipped = true;
      report.flags.clipped_to_bounds = true;
    }

    if (d.status != PositivityStatus::ok) report.flags.positivity_violation = true;
    if (d.status == PositivityStatus::equal_impact) report.flags.equal_impact = true;

    d.skipped = skip;
    report.strata.push_back(d);
    if (skip) continue;
    point += d.resolved * d.weight;
    if (d.gap_filled || d.clipped) {
      bounding_engaged = true;
      lower += iv.lb * d.weight;
      upper += iv.ub * d.weight;
    } else {
      lower += d.resolved * d.weight;
      upper += d.resolved * d.weight;
    }
    included_weight += d.weight;
  }

  if (included_weight <= 0.0)
    throw EstimationError("phi: no evaluable stratum in arm " + std::to_string(t));
  if (policy.mode == GapMode::skip_renormalize && included_weight < 1.0) {
    point /= included_weight;
    lower /= included_weight;
    upper /= included_weight;
  }

  report.point = point;
  if (bounding_engaged) {
    report.lower = std::min(lower, point);
    report.upper = std::max(upper, point);
  }
  report.flags.smoothed = policy.mode == GapMode::smooth;
  report.flags.smoothing_weight =
      policy.mode == GapMode::smooth ? weighted_mean_qs(report.strata) : 1.0;
  finalize_flags(report, counts);
  return report;
}

namespace {

// Contribution bounds for a stratum that may be missing an arm: the absent
// arm's term of the bound chain vanishes with its weight.
BoundInterval ate_contribution_bounds(const StratifiedCounts& counts, const StratumKey& key,
                                      const StratumCells& cells) {
  if (cells.arm_total(0) > 0 && cells.arm_total(1) > 0) return ate_bounds(counts, key);
  BoundInterval iv;
  iv.source = BoundInterval::Source::ate_bounds;
  if (cells.arm_total(1) > 0) {
    const BoundInterval b1 = rho_bounds(cells, 1);
    const double w1 =
        static_cast<double>(cells.arm_total(1)) / static_cast<double>(counts.arm_total(1));
    iv.lb = b1.lb * w1;
    iv.ub = b1.ub * w1;
  } else {
    const BoundInterval b0 = rho_bounds(cells, 0);
    const double w0 =
        static_cast<double>(cells.arm_total(0)) / static_cast<double>(counts.arm_total(0));
    iv.lb = -b0.ub * w0;
    iv.ub = -b0.lb * w0;
  }
  return iv;
}

// Smoothing analog for the ATE path: mixes rho_0 (estimating P(O|w)) with a
// low-variance stand-in on the same pooled-arm scale.
double smoothed_rho0(const StratumCells& cells, double raw_rho0, const GapPolicy& policy,
                     double* q_out) {
  const double n_w = static_cast<double>(cells.total());
  const double p_a0 = static_cast<double>(cells.miss[0] + cells.miss[1]) / n_w;
  double r_lb = 0.0;
  if (cells.observed_total() > 0)
    r_lb = static_cast<double>(cells.observed_with_outcome(1)) /
           static_cast<double>(cells.observed_total()) * (1.0 - p_a0);
  const double midpoint = r_lb + p_a0 / 2.0;
  double fallback = midpoint;
  if (policy.fallback != FallbackKind::midpoint && cells.observed_total() > 0)
    fallback = static_cast<double>(cells.observed_with_outcome(1)) /
               static_cast<double>(cells.observed_total());
  const double p_s = sign_stability(cells, 1, policy);
  const double q_s = std::max(0.5, p_s);
  *q_out = q_s;
  return smooth_mix<double>(raw_rho0, fallback, q_s);
}

}  // namespace

EstimateReport delta_ate(const StratifiedCounts& counts, const GapPolicy& policy,
                         std::optional<double> design_p_treat) {
  if (counts.arm_total(0) == 0 || counts.arm_total(1) == 0)
    throw EstimationError("delta_ate: both treatment arms must be nonempty");
  const double p1 = design_p_treat ? *design_p_treat
                                   : static_cast<double>(counts.arm_total(1)) /
                                         static_cast<double>(counts.total());
  if (!(p1 > 0.0 && p1 < 1.0))
    throw EstimationError("delta_ate: degenerate randomization probability");

  EstimateReport report;
  report.estimand = Estimand::ate;
  const double total = static_cast<double>(counts.total());

  double point = 0.0, lower = 0.0, upper = 0.0, included_weight = 0.0;
  bool bounding_engaged = false;

  for (const auto& [key, cells] : counts.strata()) {
    if (cells.total() == 0) continue;
    StratumDetail d;
    d.key = key;
    d.weight = static_cast<double>(cells.total()) / total;
    d.status = positivity_check(cells);

    // delta_0 with the (possibly design-supplied) randomization probability.
    std::optional<double> delta0;
    if (cells.observed_with_outcome(1) > 0) {
      const double p1_o1 = static_cast<double>(cells.obs[1][1]) /
                           static_cast<double>(cells.observed_with_outcome(1));
      delta0 = (p1_o1 - p1) / (p1 * (1.0 - p1));
    }
    const auto rho0_raw = rho0_value<double>(cells, 1);
    if (delta0 && rho0_raw) d.raw = *delta0 * *rho0_raw;

    // Per-unit bounds: the stratum's contribution bounds divided by P^(w).
    BoundInterval iv = ate_contribution_bounds(counts, key, cells);
    iv.lb /= d.weight;
    iv.ub /= d.weight;
    d.bounds = iv;

    bool skip = false;
    if (d.raw) {
      d.resolved = *d.raw;
      if (policy.mode == GapMode::smooth) {
        d.resolved = *delta0 * smoothed_rho0(cells, *rho0_raw, policy, &d.q_s);
      }
    } else {
      switch (policy.mode) {
        case GapMode::skip_renormalize:
          skip = true;
          report.flags.skipped_strata = true;
          break;
        default:
          d.resolved = iv.midpoint();
          d.gap_filled = true;
          break;
      }
    }
    if (!skip && policy.clipping_enabled() && (d.resolved < iv.lb || d.resolved > iv.ub)) {
      d.resolved = iv.clamp(d.resolved);
      d.clipped = true;
      report.flags.clipped_to_bounds = true;
    }

    if (d.status != PositivityStatus::ok) report.flags.positivity_violation = true;
    if (d.status == PositivityStatus::equal_impact) report.flags.equal_impact = true;

    d.skipped = skip;
    report.strata.push_back(d);
    if (skip) continue;
    point += d.resolved * d.weight;
    if (d.gap_filled || d.clipped) {
      bounding_engaged = true;
      lower += iv.lb * d.weight;
      upper += iv.ub * d.weight;
    } else {
      lower += d.resolved * d.weight;
      upper += d.resolved * d.weight;
    }
    included_weight += d.weight;
  }

  if (included_weight <= 0.0) throw EstimationError("delta_ate: no evaluable stratum");
  if (policy.mode == GapMode::skip_renormalize && included_weight < 1.0) {
    point /= included_weight;
    lower /= included_weight;
    upper /= included_weight;
  }

  report.point = point;
  if (bounding_engaged) {
    report.lower = std::min(lower, point);
    report.upper = std::max(upper, point);
  }
  report.flags.smoothed = policy.mode == GapMode::smooth;
  report.flags.smoothing_weight =
      policy.mode == GapMode::smooth ? weighted_mean_qs(report.strata) : 1.0;
  finalize_flags(report, counts);
  return report;
}

const char* to_string(ThetaMethod m) {
  return m == ThetaMethod::contingency ? "contingency" : "logistic";
}

ThetaMethod theta_method_from_string(const std::string& s) {
  if (s == "contingency") return ThetaMethod::contingency;
  if (s == "logistic") return ThetaMethod::logistic;
  throw std::invalid_argument("unknown theta method: " + s);
}

namespace {

// Ridge-penalized IRLS for logit p = a + b t on the stratum's two binomial
// cells (a saturated design, so with positive cells the fit reproduces the
// contingency odds ratio). The fixed ridge 1e-6 keeps the optimum finite
// under separation; steps are capped to stabilize the climb.
struct LogisticFit {
  double log_or = 0.0;
  bool converged = false;
};

LogisticFit fit_stratum_logistic(const StratumCells& cells) {
  const double n0 = static_cast<double>(cells.arm_observed(0));
  const double n1 = static_cast<double>(cells.arm_observed(1));
  const double y0 = static_cast<double>(cells.obs[0][1]);
  const double y1 = static_cast<double>(cells.obs[1][1]);
  constexpr double kRidge = 1e-6;
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-8;
  constexpr double kStepCap = 5.0;

  double a = 0.0, b = 0.0;
  LogisticFit fit;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const double q0 = 1.0 / (1.0 + std::exp(-a));
    const double q1 = 1.0 / (1.0 + std::exp(-(a + b)));
    const double w0 = n0 * q0 * (1.0 - q0);
    const double w1 = n1 * q1 * (1.0 - q1);
    // gradient of the penalized log likelihood
    const double ga = (y0 - n0 * q0) + (y1 - n1 * q1) - kRidge * a;
    const double gb = (y1 - n1 * q1) - kRidge * b;
    const double haa = w0 + w1 + kRidge;
    const double hab = w1;
    const double hbb = w1 + kRidge;
    const double det = haa * hbb - hab * hab;
    double da = (hbb * ga - hab * gb) / det;
    double db = (haa * gb - hab * ga) / det;
    da = std::clamp(da, -kStepCap, kStepCap);
    db = std::clamp(db, -kStepCap, kStepCap);
    a += da;
    b += db;
    if (std::max(std::abs(da), std::abs(db)) < kTol) {
      fit.converged = true;
      break;
    }
  }
  fit.log_or = b;
  return fit;
}

}  // namespace

ThetaResult theta_stratum(const StratifiedCounts& counts, const StratumKey& w,
                          ThetaMethod method) {
  const StratumCells* c = counts.find(w);
  ThetaResult out;
  if (!c) return out;
  if (method == ThetaMethod::contingency) {
    out.value = theta_contingency_value<double>(*c);
    return out;
  }
  if (c->arm_observed(0) == 0 || c->arm_observed(1) == 0) return out;  // no data at one t
  const LogisticFit fit = fit_stratum_logistic(*c);
  out.converged = fit.converged;
  if (fit.converged) out.value = std::exp(fit.log_or);
  return out;
}

EstimateReport aclor(const StratifiedCounts& counts, ThetaMethod method,
                     const GapPolicy& /*policy: gaps here are method-specific*/,
                     bool haldane_correction) {
  EstimateReport report;
  report.estimand = Estimand::aclor;
  const double total = static_cast<double>(counts.total());

  double point = 0.0, included_weight = 0.0;
  for (const auto& [key, cells] : counts.strata()) {
    if (cells.total() == 0) continue;
    StratumDetail d;
    d.key = key;
    d.weight = static_cast<double>(cells.total()) / total;
    d.status = positivity_check(cells);
    if (d.status != PositivityStatus::ok) report.flags.positivity_violation = true;
    if (d.status == PositivityStatus::equal_impact) report.flags.equal_impact = true;

    std::optional<double> log_theta;
    if (method == ThetaMethod::contingency) {
      const auto theta = theta_contingency_value<double>(cells);
      if (theta) {
        log_theta = std::log(*theta);
      } else if (haldane_correction) {
        // Haldane-Anscombe: +0.5 on every cell of a table with a zero cell.
        const double c11 = static_cast<double>(cells.obs[1][1]) + 0.5;
        const double c00 = static_cast<double>(cells.obs[0][0]) + 0.5;
        const double c01 = static_cast<double>(cells.obs[0][1]) + 0.5;
        const double c10 = static_cast<double>(cells.obs[1][0]) + 0.5;
        log_theta = std::log(c11 * c00 / (c01 * c10));
        d.gap_filled = true;
      }
    } else {
      if (cells.arm_observed(0) > 0 && cells.arm_observed(1) > 0) {
        const LogisticFit fit = fit_stratum_logistic(cells);
        if (fit.converged)
          log_theta = fit.log_or;
        else
          report.flags.logistic_nonconverged = true;
        if (!theta_contingency_value<double>(cells)) {
          // a zero cell: the saturated fit supplies the probabilities
          d.gap_filled = true;
          report.flags.positivity_violation = true;
        }
      }
    }

    d.raw = log_theta;
    if (log_theta) {
      d.resolved = *log_theta;
      point += d.resolved * d.weight;
      included_weight += d.weight;
    } else {
      d.skipped = true;
      report.flags.skipped_strata = true;
    }
    report.strata.push_back(d);
  }

  if (included_weight <= 0.0)
    throw EstimationError("aclor: log odds ratio undefined in every stratum");
  report.point = point / included_weight;  // skip-and-renormalize
  finalize_flags(report, counts);
  return report;
}

EstimateReport mar_estimate(const StratifiedCounts& counts, int t) {
  const AdjustmentSpec& adj = counts.adjustment();
  if (!adj.has_ice() || adj.has_pa())
    throw std::invalid_argument("mar_estimate requires counts stratified over [X, S]");
  if (counts.arm_total(t) == 0)
    throw EstimationError("mar_estimate: treatment arm " + std::to_string(t) + " is empty");

  EstimateReport report;
  report.estimand = t == 1 ? Estimand::p_outcome_t1 : Estimand::p_outcome_t0;
  const double arm = static_cast<double>(counts.arm_total(t));
  double point = 0.0;
  for (const auto& [key, cells] : counts.strata()) {
    if (cells.arm_observed(t) == 0) continue;  // P^(T=t, w, A=1) = 0
    StratumDetail d;
    d.key = key;
    d.weight = static_cast<double>(cells.arm_total(t)) / arm;
    d.resolved = static_cast<double>(cells.obs[t][1]) / static_cast<double>(cells.arm_observed(t));
    d.raw = d.resolved;
    point += d.resolved * d.weight;
    report.strata.push_back(d);
  }
  report.point = point;
  finalize_flags(report, counts);
  return report;
}

double naive_estimate(const StratifiedCounts& counts, int t) {
  std::int64_t observed = 0, with_outcome = 0;
  for (const auto& [key, cells] : counts.strata()) {
    observed += cells.arm_observed(t);
    with_outcome += cells.obs[t][1];
  }
  if (observed == 0)
    throw EstimationError("naive_estimate: no observed outcomes in arm " + std::to_string(t));
  return static_cast<double>(with_outcome) / static_cast<double>(observed);
}

}  // namespace rctmnar
