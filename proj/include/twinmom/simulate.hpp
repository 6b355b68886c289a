#pragma once

// Forward model: twin-beam joint photon-number distribution, multi-pixel
// detector response (POVM), detection mapping to photocounts, and
// multinomial sampling of finite-frame histograms.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <gmp.h>
#include <mpfr.h>

#include <json.hpp>

#include "core.hpp"
#include "data.hpp"
#include "rng.hpp"

namespace twinmom {

// ------------------------------------------------------- source statistics

/// Multimode-thermal photon-number pmf (M modes, B mean photons per mode)
/// on n = 0..n_max, by the stable all-positive recurrence.
inline std::vector<double> multimode_thermal_pmf(double M, double B, int n_max) {
  if (!(M > 0.0)) throw ValidationError("thermal pmf: mode count must be positive");
  if (!(B >= 0.0)) throw ValidationError("thermal pmf: mean per mode must be >= 0");
  if (n_max < 0) throw ValidationError("thermal pmf: negative n_max");
  std::vector<double> p(n_max + 1, 0.0);
  if (B == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double r = B / (1.0 + B);
  p[0] = std::exp(-M * std::log1p(B));
  for (int n = 0; n < n_max; ++n)
    p[n + 1] = p[n] * (static_cast<double>(n) + M) / (static_cast<double>(n) + 1.0) * r;
  return p;
}

namespace detail {

/// Smallest grid size L such that both marginals of the source keep tail
/// mass below tol/2 each; used when the caller does not fix n_max.
inline int auto_grid_size(const TwinBeamModel& m, double tail_tol) {
  for (int L = 64; L <= 1 << 14; L *= 2) {
    auto pp = multimode_thermal_pmf(m.M_p, m.B_p, L);
    auto ps = multimode_thermal_pmf(m.M_s, m.B_s, L);
    auto pi = multimode_thermal_pmf(m.M_i, m.B_i, L);
    // 1-D marginals: pair + arm noise convolution.
    auto tail_ok = [&](const std::vector<double>& noise, int cut) {
      double mass = 0.0;
      for (int k = 0; k <= cut; ++k) {
        double v = 0.0;
        for (int n = 0; n <= k; ++n) v += pp[n] * noise[k - n];
        mass += v;
      }
      return 1.0 - mass < 0.25 * tail_tol;
    };
    if (tail_ok(ps, L) && tail_ok(pi, L)) {
      // Trim: find the smallest cut that still works for both arms.
      int lo = 1, hi = L;
      while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (tail_ok(ps, mid) && tail_ok(pi, mid))
          hi = mid;
        else
          lo = mid + 1;
      }
      return lo + 2;
    }
  }
  throw ConvergenceError("source grid did not converge; check parameters");
}

}  // namespace detail

/// Joint photon-number distribution of the twin-beam model on an
/// (n_max+1)^2 grid: perfectly correlated pair component plus independent
/// per-arm noise. n_max <= 0 selects the grid automatically. The truncated
/// tail must stay below tail_tol; the result is renormalized.
inline JointDistribution twinbeam_distribution(const TwinBeamModel& m, int n_max = 0,
                                               double tail_tol = 1e-8) {
  m.validate();
  if (n_max <= 0) n_max = detail::auto_grid_size(m, tail_tol);
  auto pp = multimode_thermal_pmf(m.M_p, m.B_p, n_max);
  auto ps = multimode_thermal_pmf(m.M_s, m.B_s, n_max);
  auto pi = multimode_thermal_pmf(m.M_i, m.B_i, n_max);

  JointDistribution d;
  d.kind = DistKind::photon_number;
  d.probs = Matrix(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    if (pp[n] < 1e-18 && n > 0) continue;  // negligible pair weight
    const double w = pp[n];
    for (int a = 0; n + a <= n_max; ++a) {
      const double wa = w * ps[a];
      if (wa == 0.0) continue;
      double* row = &d.probs(n + a, n);
      for (int b = 0; n + b <= n_max; ++b) row[b] += wa * pi[b];
    }
  }
  double total = d.probs.sum();
  if (1.0 - total > tail_tol)
    throw ValidationError("twinbeam_distribution: n_max too small, tail mass " +
                          std::to_string(1.0 - total));
  d.probs.scale(1.0 / total);
  return d;
}

// ------------------------------------------------------- detector response

enum class PovmMethod {
  occupancy,       // stable recursion over occupied-pixel counts (default)
  alternating,     // the closed-form alternating sum in double precision
  alternating_mp,  // the same sum in adaptive multiple precision
};

struct PovmOptions {
  PovmMethod method = PovmMethod::occupancy;
  bool check_completeness = true;
  double completeness_tol = 1e-8;
};

/// Detector response matrix T(c, n): probability of c clicks given n
/// photons. Rows c = 0..c_max, columns n = 0..n_max.
struct PovmMatrix {
  DetectorModel det;
  Matrix T;
  int c_max() const { return static_cast<int>(T.rows()) - 1; }
  int n_max() const { return static_cast<int>(T.cols()) - 1; }
};

namespace detail {

inline double log_choose(double m, int j) {
  if (j == 0) return 0.0;
  return std::lgamma(m + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(m - static_cast<double>(j) + 1.0);
}

/// Occupancy route: track the distribution of the number of pixels hit by
/// at least one detected photon (each detected photon lands on a uniformly
/// random pixel), then add dark counts of the remaining pixels binomially.
inline void povm_fill_occupancy(const DetectorModel& det, Matrix& T) {
  const int c_max = static_cast<int>(T.rows()) - 1;
  const int n_max = static_cast<int>(T.cols()) - 1;
  const double N = static_cast<double>(det.pixels);
  const double eta = det.efficiency;
  const double D = det.dark_mean_per_pixel;
  const int v_max = std::min<long long>(c_max, det.pixels);

  // dark[v][j]: probability of j dark clicks among the N-v unoccupied pixels.
  std::vector<std::vector<double>> dark(v_max + 1);
  for (int v = 0; v <= v_max; ++v) {
    dark[v].assign(c_max - v + 1, 0.0);
    if (D == 0.0) {
      dark[v][0] = 1.0;
      continue;
    }
    const double m = N - v;
    const double logD = std::log(D), log1mD = std::log1p(-D);
    for (int j = 0; j <= c_max - v && j <= static_cast<int>(m); ++j)
      dark[v][j] = std::exp(log_choose(m, j) + j * logD + (m - j) * log1mD);
  }

  std::vector<double> G(v_max + 1, 0.0);
  G[0] = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) {
      // One more photon: detected with prob eta, landing on an already
      // occupied pixel (v stays) or a fresh one (v increments).
      for (int v = v_max; v >= 0; --v) {
        double stay = G[v] * (1.0 - eta + eta * static_cast<double>(v) / N);
        double grow = (v > 0) ? G[v - 1] * eta * (N - static_cast<double>(v - 1)) / N : 0.0;
        G[v] = stay + grow;
      }
    }
    for (int c = 0; c <= c_max; ++c) {
      Accumulator acc;
      for (int v = 0; v <= std::min(c, v_max); ++v) acc.add(G[v] * dark[v][c - v]);
      T(c, n) = acc.value();
    }
  }
}

/// Closed-form alternating sum, double precision. Catastrophically loses
/// accuracy for large click numbers on many-pixel detectors; kept for
/// comparison and for small detectors.
inline void povm_fill_alternating(const DetectorModel& det, Matrix& T) {
  const int c_max = static_cast<int>(T.rows()) - 1;
  const int n_max = static_cast<int>(T.cols()) - 1;
  const double N = static_cast<double>(det.pixels);
  const double eta = det.efficiency;
  const double D = det.dark_mean_per_pixel;
  const double log1mD = std::log1p(-D);
  for (int c = 0; c <= c_max && c <= det.pixels; ++c) {
    const double logpre = log_choose(N, c) + N * log1mD;
    for (int n = 0; n <= n_max; ++n) {
      Accumulator acc;
      for (int l = 0; l <= c; ++l) {
        double lt = log_choose(static_cast<double>(c), l) - l * log1mD +
                    n * std::log1p(l * eta / (N * (1.0 - eta))) +
                    n * std::log1p(-eta);
        double term = std::exp(logpre + lt);
        acc.add((l % 2) ? -term : term);
      }
      double v = acc.value();
      T(c, n) = ((c % 2) ? -v : v);
    }
  }
}

/// Same alternating sum with GMP/MPFR: exact binomials, adaptive precision
/// until two consecutive precisions agree to 1e-13 relative.
inline double povm_entry_mp(const DetectorModel& det, int c, int n) {
  const double eta = det.efficiency;
  const double D = det.dark_mean_per_pixel;
  double prev = std::numeric_limits<double>::quiet_NaN();
  // Start above the worst-case cancellation: bits ~ c*log2(N).
  long bits = 96 + static_cast<long>((c + 2) * std::log2(static_cast<double>(det.pixels) + 2));
  for (int round = 0; round < 8; ++round, bits *= 2) {
    mpfr_t sum, term, base, fac, one_m_D, one_m_eta;
    mpfr_inits2(bits, sum, term, base, fac, one_m_D, one_m_eta, (mpfr_ptr)nullptr);
    mpfr_set_d(one_m_D, 1.0, MPFR_RNDN);
    mpfr_sub_d(one_m_D, one_m_D, D, MPFR_RNDN);
    mpfr_set_d(one_m_eta, 1.0, MPFR_RNDN);
    mpfr_sub_d(one_m_eta, one_m_eta, eta, MPFR_RNDN);
    mpfr_set_zero(sum, 1);
    mpz_t bin;
    mpz_init(bin);
    for (int l = 0; l <= c; ++l) {
      mpz_bin_uiui(bin, static_cast<unsigned long>(c), static_cast<unsigned long>(l));
      mpfr_set_z(term, bin, MPFR_RNDN);
      // (1-D)^{-l}
      mpfr_pow_si(fac, one_m_D, -l, MPFR_RNDN);
      mpfr_mul(term, term, fac, MPFR_RNDN);
      // (1 + l*eta / (N*(1-eta)))^n
      mpfr_set_d(base, eta, MPFR_RNDN);
      mpfr_mul_si(base, base, l, MPFR_RNDN);
      mpfr_div_d(base, base, static_cast<double>(det.pixels), MPFR_RNDN);
      mpfr_div(base, base, one_m_eta, MPFR_RNDN);
      mpfr_add_d(base, base, 1.0, MPFR_RNDN);
      mpfr_pow_si(fac, base, n, MPFR_RNDN);
      mpfr_mul(term, term, fac, MPFR_RNDN);
      if (l % 2)
        mpfr_sub(sum, sum, term, MPFR_RNDN);
      else
        mpfr_add(sum, sum, term, MPFR_RNDN);
    }
    // prefactor C(N,c) (1-D)^N (1-eta)^n (-1)^c
    mpz_bin_uiui(bin, static_cast<unsigned long>(det.pixels), static_cast<unsigned long>(c));
    mpfr_set_z(term, bin, MPFR_RNDN);
    mpfr_pow_si(fac, one_m_D, static_cast<long>(det.pixels), MPFR_RNDN);
    mpfr_mul(term, term, fac, MPFR_RNDN);
    mpfr_pow_si(fac, one_m_eta, n, MPFR_RNDN);
    mpfr_mul(term, term, fac, MPFR_RNDN);
    mpfr_mul(sum, sum, term, MPFR_RNDN);
    if (c % 2) mpfr_neg(sum, sum, MPFR_RNDN);
    double v = mpfr_get_d(sum, MPFR_RNDN);
    mpz_clear(bin);
    mpfr_clears(sum, term, base, fac, one_m_D, one_m_eta, (mpfr_ptr)nullptr);
    if (std::isfinite(prev) &&
        std::abs(v - prev) <= 1e-13 * std::max(std::abs(v), 1e-300))
      return v;
    prev = v;
  }
  throw ConvergenceError("multi-precision detector response did not stabilize");
}

inline void povm_fill_mp(const DetectorModel& det, Matrix& T) {
  const int c_max = static_cast<int>(T.rows()) - 1;
  const int n_max = static_cast<int>(T.cols()) - 1;
  for (int c = 0; c <= c_max && c <= det.pixels; ++c)
    for (int n = 0; n <= n_max; ++n) T(c, n) = povm_entry_mp(det, c, n);
}

}  // namespace detail

/// Builds the detector response for click numbers 0..c_max and photon
/// numbers 0..n_max. With check_completeness, every photon column must sum
/// to 1 within completeness_tol (signals numerical breakdown or a c_max too
/// small for the requested n range); small negative round-off is clamped
/// after the check.
inline PovmMatrix povm(const DetectorModel& det, int c_max, int n_max,
                       const PovmOptions& opt = {}) {
  det.validate();
  if (c_max < 0 || n_max < 0) throw ValidationError("povm: negative grid bounds");
  if (opt.method != PovmMethod::occupancy && det.efficiency >= 1.0)
    throw ValidationError("povm: closed-form summation requires efficiency < 1");
  PovmMatrix p;
  p.det = det;
  p.T = Matrix(c_max + 1, n_max + 1);
  switch (opt.method) {
    case PovmMethod::occupancy: detail::povm_fill_occupancy(det, p.T); break;
    case PovmMethod::alternating: detail::povm_fill_alternating(det, p.T); break;
    case PovmMethod::alternating_mp: detail::povm_fill_mp(det, p.T); break;
  }
  if (opt.check_completeness) {
    for (int n = 0; n <= n_max; ++n) {
      Accumulator acc;
      for (int c = 0; c <= c_max; ++c) acc.add(p.T(c, n));
      if (std::abs(acc.value() - 1.0) > opt.completeness_tol)
        throw ConvergenceError(
            "detector response columns do not sum to 1 (n=" + std::to_string(n) +
            ", defect=" + std::to_string(acc.value() - 1.0) +
            "); increase c_max or use the multi-precision path");
    }
  }
  for (int c = 0; c <= c_max; ++c)
    for (int n = 0; n <= n_max; ++n)
      if (p.T(c, n) < 0.0) p.T(c, n) = 0.0;
  return p;
}

// ------------------------------------------------------------- detection

/// Pushes a joint photon-number distribution through the two detectors:
/// f = T_s p T_i^T over photocounts. Click grids default to the photon grid
/// plus a 20-cell dark-count margin.
inline JointDistribution detect(const JointDistribution& p, const DetectorModel& det_s,
                                const DetectorModel& det_i, int c_max_s = -1,
                                int c_max_i = -1) {
  if (p.kind != DistKind::photon_number)
    throw ValidationError("detect: input must be a photon-number distribution");
  p.validate();
  const int ns_max = static_cast<int>(p.probs.rows()) - 1;
  const int ni_max = static_cast<int>(p.probs.cols()) - 1;
  if (c_max_s < 0) c_max_s = ns_max + 20;
  if (c_max_i < 0) c_max_i = ni_max + 20;
  PovmMatrix Ts = povm(det_s, c_max_s, ns_max);
  PovmMatrix Ti = povm(det_i, c_max_i, ni_max);

  // M1 = Ts * p  (c_s x n_i)
  Matrix M1(c_max_s + 1, ni_max + 1);
  for (int cs = 0; cs <= c_max_s; ++cs)
    for (int ns = 0; ns <= ns_max; ++ns) {
      double t = Ts.T(cs, ns);
      if (t == 0.0) continue;
      for (int ni = 0; ni <= ni_max; ++ni) M1(cs, ni) += t * p.probs(ns, ni);
    }
  JointDistribution f;
  f.kind = DistKind::photocount;
  f.probs = Matrix(c_max_s + 1, c_max_i + 1);
  for (int cs = 0; cs <= c_max_s; ++cs)
    for (int ni = 0; ni <= ni_max; ++ni) {
      double v = M1(cs, ni);
      if (v == 0.0) continue;
      for (int ci = 0; ci <= c_max_i; ++ci) f.probs(cs, ci) += v * Ti.T(ci, ni);
    }
  f.renormalize();
  f.validate();
  return f;
}

// -------------------------------------------------------------- sampling

/// Draws a finite-frame histogram from a photocount distribution.
inline JointHistogram sample_histogram(const JointDistribution& f, long long frames,
                                       std::uint64_t seed) {
  if (frames <= 0) throw ValidationError("sample_histogram: frames must be positive");
  f.validate();
  const std::size_t R = f.probs.rows(), C = f.probs.cols();
  std::vector<double> flat(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) flat[r * C + c] = f.probs(r, c);
  std::mt19937_64 gen(seed);
  std::vector<long long> cnt = sample_multinomial(gen, frames, flat);
  // Trim the all-zero fringe so downstream grids scale with what was seen.
  std::size_t rmax = 0, cmax = 0;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      if (cnt[r * C + c] > 0) {
        rmax = std::max(rmax, r);
        cmax = std::max(cmax, c);
      }
  JointHistogram h;
  h.frames = frames;
  h.counts.assign(rmax + 1, std::vector<long long>(cmax + 1, 0));
  for (std::size_t r = 0; r <= rmax; ++r)
    for (std::size_t c = 0; c <= cmax; ++c) h.counts[r][c] = cnt[r * C + c];
  return h;
}

// -------------------------------------------------------------- scenarios

/// A full forward-simulation setup.
struct Scenario {
  TwinBeamModel source;
  DetectorModel det_s, det_i;
  long long frames = 0;
  std::uint64_t seed = 0;
  int n_max = 0;  // 0 = automatic grid
};

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    sc.source = twinbeam_from_json(j.at("twinbeam"));
    sc.det_s = detector_from_json(j.at("detector_s"));
    sc.det_i = detector_from_json(j.at("detector_i"));
    sc.frames = j.at("frames").get<long long>();
    sc.seed = j.value("seed", 0ULL);
    sc.n_max = j.value("n_max", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario JSON: ") + e.what());
  }
  if (sc.frames <= 0) throw ValidationError("scenario: frames must be positive");
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  return nlohmann::json{{"twinbeam", twinbeam_to_json(sc.source)},
                        {"detector_s", detector_to_json(sc.det_s)},
                        {"detector_i", detector_to_json(sc.det_i)},
                        {"frames", sc.frames},
                        {"seed", sc.seed},
                        {"n_max", sc.n_max}};
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(
      nlohmann::json::parse(detail::read_file(path), nullptr, true, true));
}

}  // namespace twinmom
