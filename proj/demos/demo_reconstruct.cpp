// Reconstruction example: recover the joint photon-number distribution behind
// noisy photocount data, two ways — detector deconvolution (EM) and model
// calibration — and compare both against the known ground truth.
//
// Build target: demo_reconstruct (no arguments; prints to stdout).

#include <cmath>
#include <cstdio>

#include <twinmom/twinmom.hpp>

using namespace twinmom;

namespace {

double tv_distance(const JointDistribution& a, const JointDistribution& b) {
  std::size_t R = std::max(a.probs.rows(), b.probs.rows());
  std::size_t C = std::max(a.probs.cols(), b.probs.cols());
  double s = 0.0;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) {
      double pa = (i < a.probs.rows() && j < a.probs.cols()) ? a.probs(i, j) : 0.0;
      double pb = (i < b.probs.rows() && j < b.probs.cols()) ? b.probs(i, j) : 0.0;
      s += std::abs(pa - pb);
    }
  return 0.5 * s;
}

}  // namespace

int main() {
  // Ground truth: a modest twin beam watched by fairly good detectors, so the
  // deconvolution is well conditioned and finishes in seconds.
  TwinBeamModel source{3.0, 0.4, 1.0, 0.05, 1.0, 0.04};  // 1.2 pairs per frame
  DetectorModel det_s{200, 0.75, 1e-4};
  DetectorModel det_i{200, 0.70, 1e-4};

  JointDistribution truth = twinbeam_distribution(source);
  JointDistribution counts = detect(truth, det_s, det_i);
  JointHistogram data = sample_histogram(counts, 300000, 11);
  std::printf("truth: %.2f mean pairs; %lld frames simulated\n\n", source.mean_pairs(),
              data.frames);

  // --- Route 1: expectation-maximization deconvolution -------------------
  EmResult em = em_reconstruct(data, det_s, det_i);
  std::printf("EM: %lld iterations, %s, log-likelihood %.6f\n", em.iterations,
              em.converged ? "converged" : "iteration cap", em.log_likelihood);
  std::printf("EM: total-variation distance to truth %.4f\n", tv_distance(em.p, truth));

  MomentTable m_truth = factorial_moments(truth, 5);
  MomentTable m_em = factorial_moments(em.p, 5);
  std::printf("EM: mean photons (s,i) = (%.3f, %.3f), truth (%.3f, %.3f)\n\n",
              m_em.at(1, 0), m_em.at(0, 1), m_truth.at(1, 0), m_truth.at(0, 1));

  // --- Route 2: calibration fit of the generating model ------------------
  // Start from a deliberately wrong guess of the pair brightness, keeping the
  // well-known camera geometry and weak-noise parameters frozen.
  CalibrationInit init;
  init.source = source;
  init.source.B_p = 0.15;  // wrong on purpose
  init.eta_s = det_s.efficiency;
  init.eta_i = det_i.efficiency;
  CalibrationOptions copt;
  copt.free = {false, false, false, true, false, false, false, false};  // B_p only
  copt.starts = 2;
  copt.max_evals = 400;
  copt.seed = 3;
  CalibrationResult cal = calibrate(data, init, det_s, det_i, copt);
  std::printf("calibration: fitted B_p %.4f (true %.3f), mean pairs %.3f (true %.2f)\n",
              cal.source.B_p, source.B_p, cal.source.mean_pairs(), source.mean_pairs());
  std::printf("calibration: residual %.3e after %lld model evaluations\n", cal.residual,
              cal.evaluations);

  // The fitted model implies a photon-number distribution directly.
  JointDistribution fitted = twinbeam_distribution(cal.source);
  std::printf("calibration: total-variation distance to truth %.4f\n",
              tv_distance(fitted, truth));
  return 0;
}
