#pragma once

// Shared basics: error types, a dense matrix, compensated summation,
// deterministic seed derivation, exact small rationals, and a chunked
// parallel-for used by the embarrassingly parallel stages.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace twinmom {

// ---------------------------------------------------------------- errors

/// Bad input: malformed file, parameter out of range, inconsistent sizes.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An iterative or numerical procedure failed to reach its target.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- matrix

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  double sum() const {
    double s = 0.0, comp = 0.0;
    for (double x : a_) {
      double t = s + x;
      comp += (std::abs(s) >= std::abs(x)) ? (s - t) + x : (x - t) + s;
      s = t;
    }
    return s + comp;
  }

  void scale(double f) {
    for (double& x : a_) x *= f;
  }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

// ------------------------------------------------------------- summation

/// Neumaier-compensated accumulator; accurate for long mixed-sign sums.
class Accumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    comp_ += (std::abs(sum_) >= std::abs(x)) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

// ------------------------------------------------------------------ seeds

/// SplitMix64 step; used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic seed for the idx-th parallel work item of a master seed.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t idx) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (idx + 1));
}

// ------------------------------------------------------------- rationals

/// Exact rational with small numerator/denominator; coefficients of the
/// criterion catalog are all of this kind.
struct Rat {
  long long num = 0;
  long long den = 1;

  constexpr Rat() = default;
  constexpr Rat(long long n) : num(n), den(1) {}
  constexpr Rat(long long n, long long d) : num(n), den(d) {}

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Exact binomial coefficient (small arguments).
inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Exact factorial for n <= 20.
inline long long factorial_ll(int n) {
  long long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// ------------------------------------------------------------ parallelism

/// Runs fn(begin, end) over [0, n) in contiguous chunks on `threads` threads.
/// threads <= 1 runs inline. Exceptions propagate from the first failing chunk.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    fn(0, n);
    return;
  }
  unsigned k = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(k);
  std::size_t chunk = (n + k - 1) / k;
  for (unsigned t = 0; t < k; ++t) {
    std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e, t] {
      try {
        fn(b, e);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& ep : errs)
    if (ep) std::rethrow_exception(ep);
}

}  // namespace twinmom
