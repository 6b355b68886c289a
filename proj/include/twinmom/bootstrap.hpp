#pragma once

// Multinomial bootstrap over photocount histograms: resample frames, re-run a
// user-supplied statistic per replica, and report per-component standard
// errors. Results are byte-identical for a fixed (seed, replicas) regardless
// of thread count.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "data.hpp"
#include "rng.hpp"

namespace twinmom {

struct BootstrapOptions {
  int replicas = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double max_failure_fraction = 0.10;
};

struct BootstrapSummary {
  std::vector<double> stderrs;  // sample standard deviation across replicas
  int used = 0;                 // replicas that produced a value
  int failures = 0;
};

/// Draws a multinomial resample of hist at its own frame count. Cells beyond
/// the recorded grid carry no probability; if the recorded counts sum to less
/// than the frame count the deficit is kept as an implicit empty-frame cell.
inline JointHistogram bootstrap_resample(const JointHistogram& hist, std::uint64_t seed) {
  const long long frames = hist.frames;
  const std::size_t R = hist.rows(), C = hist.cols();
  std::vector<double> probs(R * C);
  long long recorded = 0;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      recorded += hist.counts[r][c];
      probs[r * C + c] = static_cast<double>(hist.counts[r][c]) / static_cast<double>(frames);
    }
  // Any frame-count deficit (recorded < frames) acts as an implicit
  // empty-frame cell: unassigned trials are dropped by the sampler.
  (void)recorded;
  std::mt19937_64 gen(seed);
  std::vector<long long> draw = sample_multinomial(gen, frames, probs);
  JointHistogram out = hist;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out.counts[r][c] = draw[r * C + c];
  return out;
}

/// statistic: JointHistogram -> vector<double> (fixed length across replicas).
/// Throws ConvergenceError when more than max_failure_fraction of the
/// replicas fail; otherwise failed replicas are simply excluded.
inline BootstrapSummary bootstrap_stderr(
    const JointHistogram& hist,
    const std::function<std::vector<double>(const JointHistogram&)>& statistic,
    const BootstrapOptions& opt = {}) {
  hist.validate();
  if (opt.replicas < 2) throw ValidationError("bootstrap_stderr: need at least 2 replicas");
  if (hist.total() <= 0) throw ValidationError("bootstrap_stderr: histogram has no frames");

  const int Rn = opt.replicas;
  std::vector<std::vector<double>> values(Rn);
  std::vector<char> ok(Rn, 0);
  std::vector<std::string> first_error(1);

  parallel_for(static_cast<std::size_t>(Rn), opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      try {
        JointHistogram rep = bootstrap_resample(hist, child_seed(opt.seed, r));
        values[r] = statistic(rep);
        ok[r] = 1;
      } catch (const std::exception& e) {
        if (first_error[0].empty()) first_error[0] = e.what();
      }
    }
  });

  BootstrapSummary sum;
  std::size_t dim = 0;
  for (int r = 0; r < Rn; ++r) {
    if (!ok[r]) {
      ++sum.failures;
      continue;
    }
    if (dim == 0) dim = values[r].size();
    if (values[r].size() != dim)
      throw ValidationError("bootstrap_stderr: statistic returned inconsistent lengths");
    ++sum.used;
  }
  if (sum.failures > opt.max_failure_fraction * Rn || sum.used < 2)
    throw ConvergenceError("bootstrap_stderr: " + std::to_string(sum.failures) + "/" +
                           std::to_string(Rn) + " replicas failed" +
                           (first_error[0].empty() ? "" : " (first: " + first_error[0] + ")"));

  // Per-component sample SD over the replicas where the component is finite.
  sum.stderrs.assign(dim, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < dim; ++k) {
    long long n = 0;
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < Rn; ++r) {
      if (!ok[r]) continue;
      double v = values[r][k];
      if (!std::isfinite(v)) continue;
      ++n;
      double d = v - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (v - mean);
    }
    if (n >= 2) sum.stderrs[k] = std::sqrt(m2 / static_cast<double>(n - 1));
  }
  return sum;
}

}  // namespace twinmom
