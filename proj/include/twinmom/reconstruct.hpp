#pragma once

// Reconstruction of the joint photon-number distribution from a measured
// photocount histogram: expectation-maximization against the detector
// response, and a parametric calibration fit of the twin-beam source model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "data.hpp"
#include "optim.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace twinmom {

// ---------------------------------------------------------------------------
// Expectation-maximization
// ---------------------------------------------------------------------------

struct EmOptions {
  int n_max = -1;          // photon grid edge per arm; -1 chooses from the data
  int grid_cap = 400;      // upper bound on the automatic grid edge
  double tol = 1e-9;       // stop when max |p' - p| falls below this
  double ll_rel_tol = 1e-12;  // ... or when the log-likelihood gain is this small
  long long max_iter = 100000;
  PovmMethod povm_method = PovmMethod::occupancy;
};

struct EmResult {
  JointDistribution p;       // reconstructed joint photon-number distribution
  long long iterations = 0;
  bool converged = false;
  bool hit_iteration_cap = false;
  double log_likelihood = 0.0;           // per-frame, natural log
  std::vector<double> ll_trace;          // log-likelihood after each iteration
  int n_max_s = 0;
  int n_max_i = 0;
};

namespace detail {

/// Photon grid edge large enough that the detector response from levels above
/// it contributes negligibly to the observed photocount range.
inline int em_grid_edge(int c_max_obs, double eta, int cap) {
  double c = static_cast<double>(std::max(c_max_obs, 1));
  double edge = c / eta + 5.0 * std::sqrt(c * (1.0 - eta)) / eta + 10.0;
  int n = static_cast<int>(std::ceil(edge));
  return std::min(std::max(n, c_max_obs + 5), cap);
}

}  // namespace detail

/// Richardson-Lucy style EM for the linear mixture  d = T_s p T_i^T.
/// The detector response is built with a photocount range wide enough to be
/// complete over the photon grid, so the per-iteration likelihood of the
/// observed histogram is guaranteed non-decreasing.
inline EmResult em_reconstruct(const JointHistogram& hist, const DetectorModel& det_s,
                               const DetectorModel& det_i, const EmOptions& opt = {}) {
  hist.validate();
  det_s.validate();
  det_i.validate();
  if (hist.total() <= 0) throw ValidationError("em_reconstruct: histogram has no frames");

  // Zero-count cells carry no likelihood terms, so restrict the observed grid
  // to the bounding box of the nonzero counts; this keeps the photon grid
  // scaled to what was actually seen even if the input has a zero fringe.
  int R = 1, C = 1;
  for (int a = 0; a < static_cast<int>(hist.rows()); ++a)
    for (int b = 0; b < static_cast<int>(hist.cols()); ++b)
      if (hist.counts[a][b] > 0) {
        R = std::max(R, a + 1);
        C = std::max(C, b + 1);
      }

  int ns = opt.n_max > 0 ? opt.n_max
                         : detail::em_grid_edge(R - 1, det_s.efficiency, opt.grid_cap);
  int ni = opt.n_max > 0 ? opt.n_max
                         : detail::em_grid_edge(C - 1, det_i.efficiency, opt.grid_cap);
  ns = static_cast<int>(std::min<long long>(ns, det_s.pixels));
  ni = static_cast<int>(std::min<long long>(ni, det_i.pixels));

  // Response matrices with enough photocount rows that every photon level in
  // the grid has (numerically) complete detection probability.
  PovmOptions popt;
  popt.method = opt.povm_method;
  PovmMatrix Ts = povm(det_s, ns + 20, ns, popt);
  PovmMatrix Ti = povm(det_i, ni + 20, ni, popt);
  if (Ts.c_max() < R - 1 || Ti.c_max() < C - 1)
    throw ValidationError("em_reconstruct: photon grid cannot reach the observed photocounts");

  // Empirical frequencies restricted to observed cells.
  const double total = static_cast<double>(hist.total());
  Matrix f(R, C);
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < C; ++b) f(a, b) = static_cast<double>(hist.counts[a][b]) / total;

  EmResult res;
  res.n_max_s = ns;
  res.n_max_i = ni;
  const double u = 1.0 / ((ns + 1.0) * (ni + 1.0));
  Matrix p(ns + 1, ni + 1, u);

  Matrix d(R, C);      // model photocount probabilities on the observed grid
  Matrix ratio(R, C);  // f / d on the support of f
  Matrix M1(R, ni + 1), U(ns + 1, ni + 1), G1(ns + 1, C);
  double ll_prev = -std::numeric_limits<double>::infinity();

  for (long long it = 1; it <= opt.max_iter; ++it) {
    // d = Ts p Ti^T on rows/cols [0..R-1] x [0..C-1]
    for (int a = 0; a < R; ++a)
      for (int m = 0; m <= ni; ++m) {
        Accumulator acc;
        for (int n = 0; n <= ns; ++n) acc.add(Ts.T(a, n) * p(n, m));
        M1(a, m) = acc.value();
      }
    for (int a = 0; a < R; ++a)
      for (int b = 0; b < C; ++b) {
        Accumulator acc;
        for (int m = 0; m <= ni; ++m) acc.add(M1(a, m) * Ti.T(b, m));
        d(a, b) = acc.value();
      }

    Accumulator llacc;
    for (int a = 0; a < R; ++a)
      for (int b = 0; b < C; ++b) {
        if (f(a, b) <= 0.0) {
          ratio(a, b) = 0.0;
          continue;
        }
        if (d(a, b) <= 0.0)
          throw ConvergenceError("em_reconstruct: model assigns zero probability to an observed photocount bin at (" +
                                 std::to_string(a) + "," + std::to_string(b) + ")");
        ratio(a, b) = f(a, b) / d(a, b);
        llacc.add(f(a, b) * std::log(d(a, b)));
      }
    const double ll = llacc.value();
    if (ll + 1e-12 * std::max(1.0, std::abs(ll)) < ll_prev)
      throw ConvergenceError("em_reconstruct: log-likelihood decreased, response matrix inconsistent");
    res.ll_trace.push_back(ll);

    // p'(n,m) = p(n,m) * sum_{a,b} Ts(a,n) ratio(a,b) Ti(b,m)
    for (int n = 0; n <= ns; ++n)
      for (int b = 0; b < C; ++b) {
        Accumulator acc;
        for (int a = 0; a < R; ++a) acc.add(Ts.T(a, n) * ratio(a, b));
        G1(n, b) = acc.value();
      }
    double max_delta = 0.0;
    for (int n = 0; n <= ns; ++n)
      for (int m = 0; m <= ni; ++m) {
        Accumulator acc;
        for (int b = 0; b < C; ++b) acc.add(G1(n, b) * Ti.T(b, m));
        U(n, m) = acc.value();
        double pn = p(n, m) * U(n, m);
        max_delta = std::max(max_delta, std::abs(pn - p(n, m)));
        p(n, m) = pn;
      }

    // The multiplicative update preserves total probability exactly up to
    // roundoff; renormalize to keep long runs drift-free.
    double s = p.sum();
    if (std::abs(s - 1.0) > 1e-9)
      throw ConvergenceError("em_reconstruct: update lost normalization");
    p.scale(1.0 / s);

    res.iterations = it;
    res.log_likelihood = ll;
    const bool ll_flat =
        std::isfinite(ll_prev) && (ll - ll_prev) <= opt.ll_rel_tol * std::max(1.0, std::abs(ll));
    ll_prev = ll;
    if (max_delta < opt.tol || ll_flat) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) res.hit_iteration_cap = true;

  res.p.kind = DistKind::photon_number;
  res.p.probs = std::move(p);
  res.p.renormalize();
  return res;
}

// ---------------------------------------------------------------------------
// Parametric calibration fit
// ---------------------------------------------------------------------------

/// Order of the calibration parameter vector.
enum class CalParam : int { eta_s = 0, eta_i, M_p, B_p, M_s, B_s, M_i, B_i };

inline const std::array<const char*, 8>& cal_param_names() {
  static const std::array<const char*, 8> names = {"eta_s", "eta_i", "M_p", "B_p",
                                                   "M_s",   "B_s",   "M_i", "B_i"};
  return names;
}

struct CalibrationInit {
  TwinBeamModel source;
  double eta_s = 0.2;
  double eta_i = 0.2;
};

struct CalibrationOptions {
  std::array<bool, 8> free{true, true, true, true, true, true, true, true};
  int starts = 8;
  std::uint64_t seed = 1;
  int max_evals = 2500;  // per start
  int n_max = 0;         // photon grid edge; 0 chooses from the initial model
  bool weighted = false;
  unsigned threads = 1;
};

struct CalibrationResult {
  TwinBeamModel source;
  double eta_s = 0.0;
  double eta_i = 0.0;
  double residual = 0.0;
  long long evaluations = 0;
  bool at_bounds = false;
  int best_start = 0;
  std::vector<double> start_residuals;
  JointDistribution implied;  // photon-number distribution of the fitted model
};

namespace detail {

inline std::array<double, 8> cal_pack(const CalibrationInit& init) {
  return {init.eta_s,        init.eta_i,        init.source.M_p, init.source.B_p,
          init.source.M_s,   init.source.B_s,   init.source.M_i, init.source.B_i};
}

inline void cal_unpack(const std::array<double, 8>& x, CalibrationInit& out) {
  out.eta_s = x[0];
  out.eta_i = x[1];
  out.source.M_p = x[2];
  out.source.B_p = x[3];
  out.source.M_s = x[4];
  out.source.B_s = x[5];
  out.source.M_i = x[6];
  out.source.B_i = x[7];
}

inline const std::array<double, 8>& cal_lower() {
  static const std::array<double, 8> lo = {1e-4, 1e-4, 1e-4, 0.0, 1e-4, 0.0, 1e-4, 0.0};
  return lo;
}

inline const std::array<double, 8>& cal_upper() {
  static const std::array<double, 8> hi = {1.0, 1.0, 1e5, 1e3, 1e5, 1e3, 1e5, 1e3};
  return hi;
}

}  // namespace detail

/// Least-squares fit of the twin-beam + detector forward model to a measured
/// photocount histogram. Detector pixel counts and dark rates are held fixed
/// (taken from det_s / det_i); the efficiencies and the source parameters are
/// optimized, restricted to the coordinates enabled in opt.free.
inline CalibrationResult calibrate(const JointHistogram& hist, const CalibrationInit& init,
                                   const DetectorModel& det_s, const DetectorModel& det_i,
                                   const CalibrationOptions& opt = {}) {
  hist.validate();
  init.source.validate();
  if (opt.starts < 1) throw ValidationError("calibrate: starts must be >= 1");
  if (!(init.eta_s > 0.0 && init.eta_s <= 1.0 && init.eta_i > 0.0 && init.eta_i <= 1.0))
    throw ValidationError("calibrate: initial efficiencies must lie in (0, 1]");
  if (hist.total() <= 0) throw ValidationError("calibrate: histogram has no frames");

  // Fit over the bounding box of the nonzero counts; cells beyond it carry
  // negligible model mass and only inflate the cost of every evaluation.
  int R = 1, C = 1;
  for (int a = 0; a < static_cast<int>(hist.rows()); ++a)
    for (int b = 0; b < static_cast<int>(hist.cols()); ++b)
      if (hist.counts[a][b] > 0) {
        R = std::max(R, a + 1);
        C = std::max(C, b + 1);
      }

  const double total = static_cast<double>(hist.total());
  Matrix femp(R, C);
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < C; ++b) femp(a, b) = static_cast<double>(hist.counts[a][b]) / total;

  int n_max = opt.n_max;
  if (n_max <= 0) {
    JointDistribution probe = twinbeam_distribution(init.source, -1, 1e-8);
    n_max = static_cast<int>(probe.probs.rows()) - 1;
    n_max = std::max(n_max, std::max(R, C) + 4);
  }

  const auto& lo = detail::cal_lower();
  const auto& hi = detail::cal_upper();
  auto x0_full = detail::cal_pack(init);
  for (int i = 0; i < 8; ++i)
    x0_full[i] = std::clamp(x0_full[i], lo[i], hi[i]);

  std::vector<int> free_idx;
  for (int i = 0; i < 8; ++i)
    if (opt.free[i]) free_idx.push_back(i);

  // Residual of the forward model against the empirical frequencies.
  auto objective_full = [&](const std::array<double, 8>& x) -> double {
    CalibrationInit cand = init;
    detail::cal_unpack(x, cand);
    DetectorModel ds = det_s, di = det_i;
    ds.efficiency = cand.eta_s;
    di.efficiency = cand.eta_i;
    JointDistribution p;
    try {
      p = twinbeam_distribution(cand.source, n_max, 1e-5);
    } catch (const ValidationError&) {
      return 1e9;  // grid too small for this candidate: treat as infeasible
    }
    PovmOptions popt;
    popt.check_completeness = false;
    PovmMatrix Ts = povm(ds, R - 1, n_max, popt);
    PovmMatrix Ti = povm(di, C - 1, n_max, popt);
    Matrix M1(R, n_max + 1);
    for (int a = 0; a < R; ++a)
      for (int m = 0; m <= n_max; ++m) {
        Accumulator acc;
        for (int n = 0; n <= n_max; ++n) acc.add(Ts.T(a, n) * p.probs(n, m));
        M1(a, m) = acc.value();
      }
    Accumulator sq;
    for (int a = 0; a < R; ++a)
      for (int b = 0; b < C; ++b) {
        Accumulator acc;
        for (int m = 0; m <= n_max; ++m) acc.add(M1(a, m) * Ti.T(b, m));
        double r = acc.value() - femp(a, b);
        double w = opt.weighted ? total / std::max(femp(a, b) * total, 1e-12) : 1.0;
        sq.add(w * r * r);
      }
    return sq.value();
  };

  long long evals_total = 0;
  auto objective_free = [&](const std::vector<double>& xf) -> double {
    std::array<double, 8> x = x0_full;
    double penalty = 0.0;
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
      int i = free_idx[j];
      double v = xf[j];
      if (v < lo[i]) {
        penalty += (lo[i] - v) * (lo[i] - v);
        v = lo[i];
      } else if (v > hi[i]) {
        penalty += (v - hi[i]) * (v - hi[i]);
        v = hi[i];
      }
      x[i] = v;
    }
    ++evals_total;
    return objective_full(x) * (1.0 + penalty) + penalty;
  };

  CalibrationResult best;
  best.residual = std::numeric_limits<double>::infinity();
  best.start_residuals.assign(opt.starts, std::numeric_limits<double>::quiet_NaN());

  for (int s = 0; s < opt.starts; ++s) {
    std::vector<double> xf(free_idx.size()), steps(free_idx.size());
    std::mt19937_64 gen(child_seed(opt.seed, static_cast<std::uint64_t>(s)));
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
      int i = free_idx[j];
      double v = x0_full[i];
      if (s > 0) {
        double jitter = std::exp((uniform53(gen) * 2.0 - 1.0) * 0.35);
        v = std::clamp(v * jitter, lo[i], hi[i]);
      }
      xf[j] = v;
      steps[j] = std::max(0.05 * std::abs(v), 1e-4);
    }
    NelderMeadOptions nmo;
    nmo.max_evals = opt.max_evals;
    nmo.ftol = 1e-12;
    nmo.xtol = 1e-10;
    NelderMeadResult nm = nelder_mead(objective_free, xf, steps, nmo);
    best.start_residuals[s] = nm.fval;
    if (nm.fval < best.residual) {
      best.residual = nm.fval;
      best.best_start = s;
      std::array<double, 8> x = x0_full;
      for (std::size_t j = 0; j < free_idx.size(); ++j)
        x[free_idx[j]] = std::clamp(nm.x[j], lo[free_idx[j]], hi[free_idx[j]]);
      CalibrationInit fitted = init;
      detail::cal_unpack(x, fitted);
      best.source = fitted.source;
      best.eta_s = fitted.eta_s;
      best.eta_i = fitted.eta_i;
      best.at_bounds = false;
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        int i = free_idx[j];
        double span = hi[i] - lo[i];
        if (x[i] - lo[i] < 1e-6 * span || hi[i] - x[i] < 1e-6 * span) best.at_bounds = true;
      }
    }
  }
  best.evaluations = evals_total;
  best.implied = twinbeam_distribution(best.source, n_max, 1e-4);
  return best;
}

}  // namespace twinmom
