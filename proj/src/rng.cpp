#include "rctmnar/rng.hpp"

#include <cmath>

namespace rctmnar {

namespace {

// log C(n,k) p^k (1-p)^(n-k)
double log_binom_pmf(std::int64_t n, std::int64_t k, double p) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0) +
         static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

}  // namespace

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n < 64) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }
  // Inverse-transform walk outward from the mode: the interval layout over
  // [0,1) is k_mode, k_mode-1, k_mode+1, ... which keeps the expected number
  // of pmf evaluations O(sd) instead of O(n).
  const double u = next_double();
  const std::int64_t mode = static_cast<std::int64_t>(static_cast<double>(n) * p);
  double acc = std::exp(log_binom_pmf(n, mode, p));
  if (u < acc) return mode;
  std::int64_t lo = mode, hi = mode;
  double f_lo = acc, f_hi = acc;
  const double q = (1.0 - p) / p;
  while (lo > 0 || hi < n) {
    if (lo > 0) {
      // pmf(k-1) = pmf(k) * k/(n-k+1) * (1-p)/p
      f_lo *= static_cast<double>(lo) / static_cast<double>(n - lo + 1) * q;
      --lo;
      acc += f_lo;
      if (u < acc) return lo;
    }
    if (hi < n) {
      // pmf(k+1) = pmf(k) * (n-k)/(k+1) * p/(1-p)
      f_hi *= static_cast<double>(n - hi) / static_cast<double>(hi + 1) / q;
      ++hi;
      acc += f_hi;
      if (u < acc) return hi;
    }
    if (f_lo == 0.0 && f_hi == 0.0) break;  // underflow far in the tails
  }
  return mode;
}

std::vector<std::int64_t> multinomial(Rng& rng, std::int64_t total,
                                      const std::vector<std::int64_t>& weights) {
  std::vector<std::int64_t> out(weights.size(), 0);
  std::int64_t remaining_weight = 0;
  for (std::int64_t w : weights) remaining_weight += w;
  std::int64_t remaining = total;
  for (std::size_t i = 0; i < weights.size() && remaining > 0; ++i) {
    if (remaining_weight <= 0) break;
    if (i + 1 == weights.size()) {
      out[i] = remaining;
      break;
    }
    const double p = static_cast<double>(weights[i]) / static_cast<double>(remaining_weight);
    const std::int64_t k = rng.binomial(remaining, p);
    out[i] = k;
    remaining -= k;
    remaining_weight -= weights[i];
  }
  return out;
}

}  // namespace rctmnar
