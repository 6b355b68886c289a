#pragma once

// Moment tables of a joint distribution and the transforms between them:
//   - factorial (intensity) moments  <W_s^k W_i^l>
//   - ordinary photon-number moments <n_s^k n_i^l>
//   - generalized-ordering smoothing of intensity moments, used to measure
//     how much added noise a negativity survives.

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "data.hpp"
#include "stirling.hpp"

namespace twinmom {

enum class MomentKind { intensity, photon };

inline std::string to_string(MomentKind k) {
  return k == MomentKind::intensity ? "intensity" : "photon";
}
inline MomentKind moment_kind_from_string(const std::string& s) {
  if (s == "intensity") return MomentKind::intensity;
  if (s == "photon") return MomentKind::photon;
  throw ValidationError("unknown moment kind: " + s);
}

/// Two-index moment table up to total order K. Stored rectangular
/// (K+1)x(K+1); entries with k+l > K are zero padding. m[0][0] == 1.
struct MomentTable {
  int K = 0;
  MomentKind kind = MomentKind::intensity;
  std::vector<std::vector<double>> m;

  MomentTable() = default;
  MomentTable(int order, MomentKind knd)
      : K(order), kind(knd), m(order + 1, std::vector<double>(order + 1, 0.0)) {
    m[0][0] = 1.0;
  }

  double at(int k, int l) const {
    if (k < 0 || l < 0 || k + l > K)
      throw ValidationError("moment order (" + std::to_string(k) + "," + std::to_string(l) +
                            ") outside table of order " + std::to_string(K));
    return m[k][l];
  }

  double mean_s() const { return at(1, 0); }
  double mean_i() const { return at(0, 1); }
  /// Arithmetic mean of the two single-arm means; the natural scale of the
  /// table, used to normalize homogeneous criteria.
  double mean_intensity() const { return 0.5 * (mean_s() + mean_i()); }
};

namespace detail {
inline void check_order(int K) {
  if (K < 2 || K > kMaxMomentOrder)
    throw ValidationError("moment order must be in [2, " + std::to_string(kMaxMomentOrder) +
                          "], got " + std::to_string(K));
}
}  // namespace detail

/// Factorial (intensity) moments of a joint distribution:
///   m[k][l] = sum_{n_s,n_i} p(n_s,n_i) * (n_s)_k * (n_i)_l
/// with (n)_k the falling factorial. Normalized so m[0][0] == 1 exactly.
inline MomentTable factorial_moments(const JointDistribution& d, int K = 5) {
  detail::check_order(K);
  d.validate();
  const std::size_t R = d.probs.rows(), C = d.probs.cols();

  // Falling-factorial lookup per axis value.
  std::vector<std::vector<double>> ffr(R, std::vector<double>(K + 1, 1.0));
  for (std::size_t n = 0; n < R; ++n)
    for (int k = 1; k <= K; ++k)
      ffr[n][k] = ffr[n][k - 1] * (static_cast<double>(n) - (k - 1));
  std::vector<std::vector<double>> ffc(C, std::vector<double>(K + 1, 1.0));
  for (std::size_t n = 0; n < C; ++n)
    for (int k = 1; k <= K; ++k)
      ffc[n][k] = ffc[n][k - 1] * (static_cast<double>(n) - (k - 1));
  // Values below the falling-factorial support are exact zeros.
  for (std::size_t n = 0; n < R; ++n)
    for (int k = static_cast<int>(n) + 1; k <= K; ++k) ffr[n][k] = 0.0;
  for (std::size_t n = 0; n < C; ++n)
    for (int k = static_cast<int>(n) + 1; k <= K; ++k) ffc[n][k] = 0.0;

  MomentTable t(K, MomentKind::intensity);
  for (int k = 0; k <= K; ++k)
    for (int l = 0; k + l <= K; ++l) {
      Accumulator acc;
      for (std::size_t r = 0; r < R; ++r) {
        if (k > static_cast<int>(r)) continue;
        const double fk = ffr[r][k];
        for (std::size_t c = 0; c < C; ++c) {
          double p = d.probs(r, c);
          if (p != 0.0) acc.add(p * fk * ffc[c][l]);
        }
      }
      t.m[k][l] = acc.value();
    }
  // Remove residual normalization drift of the input distribution.
  double z = t.m[0][0];
  for (auto& row : t.m)
    for (double& x : row) x /= z;
  t.m[0][0] = 1.0;
  return t;
}

/// Ordinary photon-number moments m[k][l] = <n_s^k n_i^l>.
inline MomentTable photon_number_moments(const JointDistribution& d, int K = 5) {
  detail::check_order(K);
  d.validate();
  const std::size_t R = d.probs.rows(), C = d.probs.cols();
  std::vector<std::vector<double>> pwr(R, std::vector<double>(K + 1, 1.0));
  for (std::size_t n = 0; n < R; ++n)
    for (int k = 1; k <= K; ++k) pwr[n][k] = pwr[n][k - 1] * static_cast<double>(n);
  std::vector<std::vector<double>> pwc(C, std::vector<double>(K + 1, 1.0));
  for (std::size_t n = 0; n < C; ++n)
    for (int k = 1; k <= K; ++k) pwc[n][k] = pwc[n][k - 1] * static_cast<double>(n);

  MomentTable t(K, MomentKind::photon);
  for (int k = 0; k <= K; ++k)
    for (int l = 0; k + l <= K; ++l) {
      Accumulator acc;
      for (std::size_t r = 0; r < R; ++r) {
        const double fk = pwr[r][k];
        for (std::size_t c = 0; c < C; ++c) {
          double p = d.probs(r, c);
          if (p != 0.0) acc.add(p * fk * pwc[c][l]);
        }
      }
      t.m[k][l] = acc.value();
    }
  double z = t.m[0][0];
  for (auto& row : t.m)
    for (double& x : row) x /= z;
  t.m[0][0] = 1.0;
  return t;
}

/// Converts between factorial (intensity) and ordinary photon-number
/// moments using the exact Stirling matrices; a round trip is an identity
/// up to rounding.
inline MomentTable convert_moments(const MomentTable& in, MomentKind target) {
  if (in.kind == target) return in;
  StirlingMatrices sm = stirling_matrices(std::max(in.K, 1));
  // coefficient c(k,a): weight of input order a in output order k per axis
  auto coeff = [&](int k, int a) -> double {
    if (k == 0 || a == 0) return (k == a) ? 1.0 : 0.0;
    if (a > k) return 0.0;
    long long v = (target == MomentKind::photon) ? sm.second[k - 1][a - 1]
                                                 : sm.first[k - 1][a - 1];
    return static_cast<double>(v);
  };
  MomentTable out(in.K, target);
  for (int k = 0; k <= in.K; ++k)
    for (int l = 0; k + l <= in.K; ++l) {
      Accumulator acc;
      for (int a = 0; a <= k; ++a) {
        double ca = coeff(k, a);
        if (ca == 0.0) continue;
        for (int b = 0; b <= l; ++b) {
          double cb = coeff(l, b);
          if (cb != 0.0) acc.add(ca * cb * in.m[a][b]);
        }
      }
      out.m[k][l] = acc.value();
    }
  out.m[0][0] = 1.0;
  return out;
}

/// How smoothed single-arm moments are formed from the original ones.
///   exponential_noise: <W^k> -> moments of W plus independent exponential
///     noise of mean t; per-order weight C(k,j) j! t^j on <W^{k-j}>.
///   laguerre_kernel:   polynomial kernel weights C(k,j)^2 j! t^j; additive
///     in t (smoothing by t1 then t2 equals smoothing by t1+t2).
enum class SOrderingForm { exponential_noise, laguerre_kernel };

/// Intensity moments at ordering parameter s in [-1, 1]; s = 1 returns the
/// input, s < 1 mixes in noise of strength t = (1-s)/2.
inline MomentTable s_ordered_moments(const MomentTable& in, double s,
                                     SOrderingForm form = SOrderingForm::exponential_noise) {
  if (in.kind != MomentKind::intensity)
    throw ValidationError("s_ordered_moments: input must be an intensity-moment table");
  if (!(s >= -1.0 && s <= 1.0))
    throw ValidationError("s_ordered_moments: s must be in [-1, 1]");
  const double t = 0.5 * (1.0 - s);
  auto w = [&](int k, int j) -> double {
    double c = static_cast<double>(binomial(k, j));
    double f = static_cast<double>(factorial_ll(j));
    double base = (form == SOrderingForm::exponential_noise) ? c * f : c * c * f;
    return base * std::pow(t, j);
  };
  MomentTable out(in.K, MomentKind::intensity);
  for (int k = 0; k <= in.K; ++k)
    for (int l = 0; k + l <= in.K; ++l) {
      Accumulator acc;
      for (int j = 0; j <= k; ++j) {
        double wk = w(k, j);
        if (wk == 0.0) continue;
        for (int q = 0; q <= l; ++q) {
          double wl = w(l, q);
          if (wl != 0.0) acc.add(wk * wl * in.m[k - j][l - q]);
        }
      }
      out.m[k][l] = acc.value();
    }
  out.m[0][0] = 1.0;
  return out;
}

// --------------------------------------------------------------------- IO

inline nlohmann::json moment_table_to_json(const MomentTable& t) {
  return nlohmann::json{{"K", t.K}, {"kind", to_string(t.kind)}, {"m", t.m}};
}

inline MomentTable moment_table_from_json(const nlohmann::json& j) {
  MomentTable t;
  try {
    t.K = j.at("K").get<int>();
    t.kind = j.contains("kind") ? moment_kind_from_string(j.at("kind").get<std::string>())
                                : MomentKind::intensity;
    t.m = j.at("m").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("moment table JSON: ") + e.what());
  }
  if (t.K < 0 || t.m.size() != static_cast<std::size_t>(t.K + 1))
    throw ValidationError("moment table JSON: row count does not match K");
  for (const auto& row : t.m)
    if (row.size() != static_cast<std::size_t>(t.K + 1))
      throw ValidationError("moment table JSON: ragged rows");
  if (std::abs(t.m[0][0] - 1.0) > 1e-12)
    throw ValidationError("moment table JSON: m[0][0] must be 1");
  return t;
}

inline MomentTable load_moment_table(const std::string& path) {
  return moment_table_from_json(
      nlohmann::json::parse(detail::read_file(path), nullptr, true, true));
}

inline void save_moment_table(const std::string& path, const MomentTable& t) {
  detail::write_file(path, moment_table_to_json(t).dump(2) + "\n");
}

}  // namespace twinmom
