#pragma once

// Random sampling utilities. The binomial sampler uses mode-centered
// inversion (expected O(sigma) work per draw), so resampling a large
// histogram costs far less than drawing frames one by one. All draws are
// deterministic for a fixed seed and build.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "core.hpp"

namespace twinmom {

/// 53-bit uniform in [0,1) from a 64-bit engine; avoids distribution
/// objects whose streams vary across standard-library implementations.
inline double uniform53(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Exact Binomial(n, p) sample via inversion outward from the mode.
inline long long sample_binomial(std::mt19937_64& gen, long long n, double p) {
  if (n < 0) throw ValidationError("binomial: negative trial count");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n == 0) return 0;
  bool flipped = false;
  if (p > 0.5) {
    p = 1.0 - p;
    flipped = true;
  }
  double u = uniform53(gen);

  const double logp = std::log(p), logq = std::log1p(-p);
  auto log_pmf = [&](long long k) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0) +
           static_cast<double>(k) * logp + static_cast<double>(n - k) * logq;
  };
  long long mode = static_cast<long long>((static_cast<double>(n) + 1.0) * p);
  if (mode > n) mode = n;
  double pm = std::exp(log_pmf(mode));

  // Walk outward from the mode, accumulating probability mass until u is hit.
  long long result = mode;
  double acc = pm;
  if (u >= acc) {
    long long lo = mode, hi = mode;
    double plo = pm, phi = pm;
    const double r = p / (1.0 - p);
    result = -1;
    while (lo > 0 || hi < n) {
      if (hi < n) {
        phi *= r * static_cast<double>(n - hi) / static_cast<double>(hi + 1);
        ++hi;
        acc += phi;
        if (u < acc) {
          result = hi;
          break;
        }
      }
      if (lo > 0) {
        plo *= static_cast<double>(lo) / (r * static_cast<double>(n - lo + 1));
        --lo;
        acc += plo;
        if (u < acc) {
          result = lo;
          break;
        }
      }
    }
    if (result < 0) result = n;  // mass lost to rounding; take the boundary
  }
  return flipped ? n - result : result;
}

/// Multinomial draw over `probs` (need not sum to exactly 1; any residual
/// probability is treated as an extra discarded cell). Returns counts.
inline std::vector<long long> sample_multinomial(std::mt19937_64& gen, long long trials,
                                                 const std::vector<double>& probs) {
  std::vector<long long> counts(probs.size(), 0);
  long long remaining = trials;
  double rem_p = 1.0;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    double pc = probs[i] / rem_p;
    if (pc > 1.0) pc = 1.0;
    if (pc < 0.0) pc = 0.0;
    long long k = (i + 1 == probs.size() && rem_p <= probs[i] * (1.0 + 1e-12))
                      ? remaining
                      : sample_binomial(gen, remaining, pc);
    counts[i] = k;
    remaining -= k;
    rem_p -= probs[i];
    if (rem_p <= 0.0) break;
  }
  return counts;
}

}  // namespace twinmom
