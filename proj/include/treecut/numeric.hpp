#ifndef TREECUT_NUMERIC_HPP
#define TREECUT_NUMERIC_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace treecut {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving log space. -inf operands stand for
// probability zero and must not produce NaN.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> vals) {
  double hi = kNegInf;
  for (double v : vals) hi = v > hi ? v : hi;
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : vals) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// log(p) and log(1-p) evaluated so that p values represented as 1 - eps
// keep full precision near both endpoints.
inline double log_prob(double p) { return std::log1p(p - 1.0); }
inline double log_one_minus(double p) { return std::log1p(-p); }

// Deterministic uniform source. std::mt19937_64 is fully specified by the
// standard and the 53-bit mapping below sidesteps the library-defined
// std distributions, so streams are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n), rejection sampled to kill modulo bias
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace treecut

#endif
