#ifndef RCTMNAR_FORMULAS_HPP
#define RCTMNAR_FORMULAS_HPP

#include <optional>

#include "rctmnar/stratified_counts.hpp"

// Stratum-level identification formulas. Everything here is a pure function
// of integer counts, templated on the number type Num so the same code runs
// in double precision (production) and exact rational arithmetic (oracle
// tests). Num needs construction from std::int64_t and field operations.
//
// "Undefined" (nullopt) is a value, not an error: it marks strata where the
// positivity condition fails (no observed outcomes at one level, or equal
// treatment proportions across outcome levels). Gates on count equality use
// exact integer cross-products, never floating comparisons.

namespace rctmnar {

template <class Num>
Num num_ratio(std::int64_t num, std::int64_t den) {
  return Num(num) / Num(den);
}

// True when P^(T=1|O*=1,w) and P^(T=1|O*=0,w) are both defined and equal
// (the equal-impact case); cross-multiplied so the test is exact.
inline bool equal_treatment_split(const StratumCells& c) {
  const std::int64_t n1 = c.observed_with_outcome(1);
  const std::int64_t n0 = c.observed_with_outcome(0);
  if (n1 == 0 || n0 == 0) return false;
  return c.obs[1][1] * n0 == c.obs[1][0] * n1;
}

// True when one of the observed outcome levels is absent (the lack-of-data case).
inline bool lacks_outcome_levels(const StratumCells& c) {
  return c.observed_with_outcome(1) == 0 || c.observed_with_outcome(0) == 0;
}

// rho_0 = (P(T=t|w) - P(T=t|not O*,w)) / (P(T=t|O*,w) - P(T=t|not O*,w)).
// Recovers P(O|w) from observed rows; symmetric in the treatment arm.
template <class Num>
std::optional<Num> rho0_value(const StratumCells& c, int t) {
  if (lacks_outcome_levels(c) || equal_treatment_split(c)) return std::nullopt;
  const std::int64_t n_w = c.total();
  if (n_w == 0) return std::nullopt;
  const Num p_t = num_ratio<Num>(c.arm_total(t), n_w);
  const Num p_t_o1 = num_ratio<Num>(c.obs[t][1], c.observed_with_outcome(1));
  const Num p_t_o0 = num_ratio<Num>(c.obs[t][0], c.observed_with_outcome(0));
  return (p_t - p_t_o0) / (p_t_o1 - p_t_o0);
}

// rho = P(T=t|O*,w)/P(T=t|w) * rho_0; estimates P(O|T=t,w).
template <class Num>
std::optional<Num> rho_value(const StratumCells& c, int t) {
  const auto r0 = rho0_value<Num>(c, t);
  if (!r0) return std::nullopt;
  const std::int64_t arm = c.arm_total(t);
  if (arm == 0) return std::nullopt;
  const Num p_t = num_ratio<Num>(arm, c.total());
  const Num p_t_o1 = num_ratio<Num>(c.obs[t][1], c.observed_with_outcome(1));
  return p_t_o1 / p_t * *r0;
}

// delta_0 = (P(T=1|O*=1,w) - P(T=1)) / (P(T=1)(1 - P(T=1))). The marginal
// P(T=1) comes from the whole table, so arm totals are passed alongside.
template <class Num>
std::optional<Num> delta0_value(const StratumCells& c, std::int64_t arm1_total,
                                std::int64_t grand_total) {
  const std::int64_t n_o1 = c.observed_with_outcome(1);
  if (n_o1 == 0) return std::nullopt;
  if (arm1_total == 0 || arm1_total == grand_total) return std::nullopt;
  const Num p1 = num_ratio<Num>(arm1_total, grand_total);
  const Num p1_o1 = num_ratio<Num>(c.obs[1][1], n_o1);
  return (p1_o1 - p1) / (p1 * (Num(1) - p1));
}

// Contingency-table odds ratio between O* and T within the stratum,
// theta = (n11 * n00) / (n01 * n10); undefined on any zero cell.
template <class Num>
std::optional<Num> theta_contingency_value(const StratumCells& c) {
  const std::int64_t n11 = c.obs[1][1], n00 = c.obs[0][0];
  const std::int64_t n01 = c.obs[0][1], n10 = c.obs[1][0];
  if (n11 == 0 || n00 == 0 || n01 == 0 || n10 == 0) return std::nullopt;
  return Num(n11) * Num(n00) / (Num(n01) * Num(n10));
}

// Phi = sum over strata with P^(w,T=t) > 0 of rho(w,t) * P^(w|T=t).
// Pure form: undefined as soon as any included stratum is undefined. The
// policy-aware estimator in estimators.hpp layers gap handling on top.
template <class Num>
std::optional<Num> phi_value(const StratifiedCounts& counts, int t) {
  const std::int64_t arm = counts.arm_total(t);
  if (arm == 0) return std::nullopt;
  Num acc(0);
  for (const auto& [key, cells] : counts.strata()) {
    if (cells.arm_total(t) == 0) continue;
    const auto rho = rho_value<Num>(cells, t);
    if (!rho) return std::nullopt;
    acc = acc + *rho * num_ratio<Num>(cells.arm_total(t), arm);
  }
  return acc;
}

// Delta = sum over strata of delta_0(w) * rho_0(w, t=1) * P^(w).
template <class Num>
std::optional<Num> delta_value(const StratifiedCounts& counts) {
  Num acc(0);
  for (const auto& [key, cells] : counts.strata()) {
    if (cells.total() == 0) continue;
    const auto d0 = delta0_value<Num>(cells, counts.arm_total(1), counts.total());
    const auto r0 = rho0_value<Num>(cells, 1);
    if (!d0 || !r0) return std::nullopt;
    acc = acc + *d0 * *r0 * num_ratio<Num>(cells.total(), counts.total());
  }
  return acc;
}

// Sign-stability smoothing mix: rho~ = (2 q_s - 1) rho + 2 (1 - q_s) R,
// a convex combination for q_s in [1/2, 1].
template <class Num>
Num smooth_mix(const Num& rho, const Num& fallback, const Num& q_s) {
  const Num two(2);
  const Num one(1);
  return (two * q_s - one) * rho + two * (one - q_s) * fallback;
}

}  // namespace rctmnar

#endif
