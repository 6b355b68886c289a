#pragma once

// Noise-robustness depth of a violated moment criterion: the amount of
// ordering noise t = (1-s)/2 at which the criterion value first returns to
// zero. Larger depth = violation survives more added noise.

#include <cmath>
#include <string>

#include "core.hpp"
#include "criteria.hpp"
#include "moments.hpp"

namespace twinmom {

struct NcdResult {
  std::string id;
  double tau = 1.0;          // threshold in t = (1-s)/2, in [0,1]
  double s_threshold = -1.0; // same point expressed in s
  bool bracketed = false;    // false: still violated at s = -1 (tau capped at 1)
};

/// Computes the noise depth of criterion `c` on the given intensity-moment
/// table: scans t in [0,1] on 33 points, then bisects the first sign change
/// until the bracket is narrower than s_tol in s. Requires the criterion to
/// be violated (value < 0) at s = 1.
inline NcdResult compute_ncd(const CriterionSpec& c, const MomentTable& intensity,
                             SOrderingForm form = SOrderingForm::exponential_noise,
                             double s_tol = 1e-6) {
  if (c.basis != MomentKind::intensity)
    throw ValidationError("noise depth is defined for intensity-moment criteria, not " + c.id);
  auto value_at = [&](double t) {
    return eval_criterion(c, s_ordered_moments(intensity, 1.0 - 2.0 * t, form));
  };
  if (!(value_at(0.0) < 0.0))
    throw ValidationError("noise depth requested for non-violated criterion " + c.id);

  NcdResult r;
  r.id = c.id;

  const int kScan = 32;
  double prev_t = 0.0;
  double cross_lo = -1.0, cross_hi = -1.0;
  for (int i = 1; i <= kScan; ++i) {
    double t = static_cast<double>(i) / kScan;
    if (value_at(t) >= 0.0) {
      cross_lo = prev_t;
      cross_hi = t;
      break;
    }
    prev_t = t;
  }
  if (cross_lo < 0.0) {
    r.tau = 1.0;  // violated all the way to s = -1
    r.s_threshold = -1.0;
    r.bracketed = false;
    return r;
  }
  const double t_tol = 0.5 * s_tol;
  while (cross_hi - cross_lo > t_tol) {
    double mid = 0.5 * (cross_lo + cross_hi);
    if (value_at(mid) < 0.0)
      cross_lo = mid;
    else
      cross_hi = mid;
  }
  r.tau = 0.5 * (cross_lo + cross_hi);
  r.s_threshold = 1.0 - 2.0 * r.tau;
  r.bracketed = true;
  return r;
}

}  // namespace twinmom
