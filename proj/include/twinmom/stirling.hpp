#pragma once

// Exact Stirling-number matrices connecting ordinary photon-number moments
// with factorial (intensity) moments of the same order.
//
//   <n^k>   = sum_{l<=k} S2(k,l) <W^l>     (second kind)
//   <W^k>   = sum_{l<=k} S1(k,l) <n^l>     (first kind, signed)
//
// Matrices are stored for indices 1..K at [k-1][l-1], lower triangular,
// with exact 64-bit integer entries; construction verifies S2 * S1 == I
// exactly and checks for overflow.

#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"

namespace twinmom {

inline constexpr int kMaxMomentOrder = 8;

struct StirlingMatrices {
  int K = 0;
  // second[k-1][l-1] = S2(k,l); first[k-1][l-1] = S1(k,l) (signed).
  std::vector<std::vector<long long>> second;
  std::vector<std::vector<long long>> first;
};

namespace detail {
inline long long checked_add(long long a, long long b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r)) throw ConvergenceError("stirling: 64-bit overflow");
  return r;
}
inline long long checked_mul(long long a, long long b) {
  long long r;
  if (__builtin_mul_overflow(a, b, &r)) throw ConvergenceError("stirling: 64-bit overflow");
  return r;
}
}  // namespace detail

/// Builds both triangular matrices up to order K and verifies exactly that
/// they are mutual inverses.
inline StirlingMatrices stirling_matrices(int K) {
  if (K < 1 || K > kMaxMomentOrder)
    throw ValidationError("stirling_matrices: order must be in [1, " +
                          std::to_string(kMaxMomentOrder) + "]");
  StirlingMatrices m;
  m.K = K;
  m.second.assign(K, std::vector<long long>(K, 0));
  m.first.assign(K, std::vector<long long>(K, 0));

  // Recurrences over (k,l) with 1-based semantics:
  //   S2(k,l) = l*S2(k-1,l) + S2(k-1,l-1)
  //   S1(k,l) = S1(k-1,l-1) - (k-1)*S1(k-1,l)
  for (int k = 1; k <= K; ++k) {
    for (int l = 1; l <= k; ++l) {
      if (k == 1) {
        m.second[0][0] = 1;
        m.first[0][0] = 1;
        continue;
      }
      long long s2_up = (l <= k - 1) ? m.second[k - 2][l - 1] : 0;
      long long s2_diag = (l >= 2) ? m.second[k - 2][l - 2] : 0;
      m.second[k - 1][l - 1] =
          detail::checked_add(detail::checked_mul(static_cast<long long>(l), s2_up), s2_diag);

      long long s1_up = (l <= k - 1) ? m.first[k - 2][l - 1] : 0;
      long long s1_diag = (l >= 2) ? m.first[k - 2][l - 2] : 0;
      m.first[k - 1][l - 1] = detail::checked_add(
          s1_diag, -detail::checked_mul(static_cast<long long>(k - 1), s1_up));
    }
  }

  // Exact inverse check: (second * first)(k,l) == delta_{kl}.
  for (int k = 1; k <= K; ++k) {
    for (int l = 1; l <= K; ++l) {
      long long acc = 0;
      for (int j = 1; j <= K; ++j)
        acc = detail::checked_add(
            acc, detail::checked_mul(m.second[k - 1][j - 1], m.first[j - 1][l - 1]));
      if (acc != (k == l ? 1 : 0))
        throw ConvergenceError("stirling_matrices: inverse verification failed");
    }
  }
  return m;
}

}  // namespace twinmom
