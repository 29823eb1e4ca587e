#ifndef RCTMNAR_RNG_HPP
#define RCTMNAR_RNG_HPP

#include <cstdint>
#include <vector>

namespace rctmnar {

// splitmix64 step; used both as a generator stage and to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic child seed for stream `index` of a master seed. Replicate i of
// a Monte Carlo run uses derive_seed(master, i), so parallel and serial
// execution see identical streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// xoshiro256** — small, fast, and fully specified here so results do not
// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Index into a discrete distribution given by `probs` (assumed to sum to 1;
  // the last category absorbs any rounding slack).
  int categorical(const std::vector<double>& probs) {
    double u = next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free with negligible modulo bias for n << 2^64 use cases here.
    return next_u64() % n;
  }

  // Binomial(n, p) by inversion for small n, otherwise by counting waves of
  // a normal-free geometric-style loop. n stays modest in this codebase
  // (count-cell resampling), so the simple O(n) draw is acceptable only for
  // small n; use the BTPE-free split below for large n.
  std::int64_t binomial(std::int64_t n, double p);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// Multinomial draw over `weights` (nonnegative, not necessarily normalized)
// with `total` trials, via sequential conditional binomials. Deterministic
// given the Rng state.
std::vector<std::int64_t> multinomial(Rng& rng, std::int64_t total,
                                      const std::vector<std::int64_t>& weights);

}  // namespace rctmnar

#endif
