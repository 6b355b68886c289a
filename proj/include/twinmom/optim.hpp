#pragma once

// Derivative-free local minimization (Nelder-Mead simplex) used by the
// calibration fit. Deterministic: no internal randomness.

#include <algorithm>
#include <functional>
#include <vector>

#include "core.hpp"

namespace twinmom {

struct NelderMeadOptions {
  int max_evals = 4000;
  double ftol = 1e-12;  // relative spread of simplex values
  double xtol = 1e-9;   // absolute spread of simplex vertices
};

struct NelderMeadResult {
  std::vector<double> x;
  double fval = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Minimizes fn over R^d starting at x0 with per-dimension initial steps.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                    std::vector<double> x0, const std::vector<double>& steps,
                                    const NelderMeadOptions& opt = {}) {
  const std::size_t d = x0.size();
  if (steps.size() != d) throw ValidationError("nelder_mead: steps size mismatch");
  NelderMeadResult res;
  if (d == 0) {
    res.x = x0;
    res.fval = fn(x0);
    res.evals = 1;
    res.converged = true;
    return res;
  }

  std::vector<std::vector<double>> X(d + 1, x0);
  std::vector<double> F(d + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return fn(x);
  };
  for (std::size_t i = 0; i < d; ++i) X[i + 1][i] += steps[i] != 0.0 ? steps[i] : 1e-3;
  for (std::size_t i = 0; i <= d; ++i) F[i] = eval(X[i]);

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  std::vector<std::size_t> ord(d + 1);
  while (evals < opt.max_evals) {
    for (std::size_t i = 0; i <= d; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return F[a] < F[b]; });

    double fbest = F[ord[0]], fworst = F[ord[d]];
    double xspread = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      xspread = std::max(xspread, std::abs(X[ord[d]][i] - X[ord[0]][i]));
    if (fworst - fbest <= opt.ftol * (std::abs(fbest) + opt.ftol) || xspread <= opt.xtol) {
      res.converged = true;
      break;
    }

    // centroid of all but worst
    std::vector<double> cen(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j <= d; ++j)
        if (j != ord[d]) cen[i] += X[j][i];
      cen[i] /= static_cast<double>(d);
    }
    auto blend = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t i = 0; i < d; ++i) x[i] = cen[i] + t * (X[ord[d]][i] - cen[i]);
      return x;
    };

    std::vector<double> xr = blend(-alpha);
    double fr = eval(xr);
    if (fr < F[ord[0]]) {
      std::vector<double> xe = blend(-gamma);
      double fe = eval(xe);
      if (fe < fr) {
        X[ord[d]] = std::move(xe);
        F[ord[d]] = fe;
      } else {
        X[ord[d]] = std::move(xr);
        F[ord[d]] = fr;
      }
      continue;
    }
    if (fr < F[ord[d - 1]]) {
      X[ord[d]] = std::move(xr);
      F[ord[d]] = fr;
      continue;
    }
    std::vector<double> xc = blend(fr < F[ord[d]] ? -rho : rho);
    double fc = eval(xc);
    if (fc < std::min(fr, F[ord[d]])) {
      X[ord[d]] = std::move(xc);
      F[ord[d]] = fc;
      continue;
    }
    // shrink toward best
    for (std::size_t j = 0; j <= d; ++j) {
      if (j == ord[0]) continue;
      for (std::size_t i = 0; i < d; ++i)
        X[j][i] = X[ord[0]][i] + sigma * (X[j][i] - X[ord[0]][i]);
      F[j] = eval(X[j]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (F[i] < F[best]) best = i;
  res.x = X[best];
  res.fval = F[best];
  res.evals = evals;
  return res;
}

}  // namespace twinmom
