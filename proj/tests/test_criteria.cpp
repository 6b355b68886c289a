#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include <twinmom/criteria.hpp>

#include "oracles.hpp"

using namespace twinmom;

namespace {

/// Table with the two arms swapped: m[k][l] -> m[l][k].
MomentTable transposed(const MomentTable& t) {
  MomentTable out(t.K, t.kind);
  for (int k = 0; k <= t.K; ++k)
    for (int l = 0; k + l <= t.K; ++l) out.m[k][l] = t.m[l][k];
  return out;
}

/// Table under intensity rescaling W -> lam*W: m[k][l] -> lam^(k+l) m[k][l].
MomentTable rescaled(const MomentTable& t, double lam) {
  MomentTable out(t.K, t.kind);
  for (int k = 0; k <= t.K; ++k)
    for (int l = 0; k + l <= t.K; ++l) out.m[k][l] = std::pow(lam, k + l) * t.m[k][l];
  return out;
}

}  // namespace

TEST_CASE("catalog has the full family breakdown with unique ids") {
  std::map<Family, int> count;
  std::set<std::string> ids;
  for (const auto& c : criterion_catalog()) {
    ++count[c.family];
    CHECK(ids.insert(c.id).second);  // no duplicate ids
    CHECK(!c.formula.empty());
    CHECK(c.order >= 2);
    CHECK(!c.terms.empty());
  }
  CHECK(criterion_catalog().size() == 154);
  CHECK(count[Family::E] == 13);
  CHECK(count[Family::Emaj] == 8);
  CHECK(count[Family::Epoly] == 27);
  CHECK(count[Family::B] == 13);
  CHECK(count[Family::L] == 12);
  CHECK(count[Family::D] == 7);
  CHECK(count[Family::T] == 9);
  CHECK(count[Family::M] == 3);
  CHECK(count[Family::C] == 4);
  CHECK(count[Family::N] == 6);
  CHECK(count[Family::F] == 0);  // distribution-element entries are generated per grid
  CHECK(count[Family::Composite] == 52);

  // Basis split: photon-statistics entries vs intensity-moment entries.
  for (const auto& c : criterion_catalog()) {
    if (c.family == Family::N)
      CHECK(c.basis == MomentKind::photon);
    else if (c.family != Family::F)
      CHECK(c.basis == MomentKind::intensity);
  }

  CHECK(find_criterion("E_001") != nullptr);
  CHECK(find_criterion("no_such_id") == nullptr);
  CHECK_THROWS_AS(criterion("no_such_id"), ValidationError);
  CHECK(criterion("M_1100").family == Family::M);
  CHECK(criterion("aL_20_11.s").local);
  CHECK(!criterion("E_001").local);
}

TEST_CASE("family names round trip") {
  for (Family f : {Family::E, Family::Emaj, Family::Epoly, Family::B, Family::L, Family::D,
                   Family::T, Family::M, Family::C, Family::N, Family::F, Family::Composite})
    CHECK(family_from_string(to_string(f)) == f);
  CHECK_THROWS_AS(family_from_string("XX"), ValidationError);
}

TEST_CASE("paired thermal B=1 reference values") {
  MomentTable t = oracles::paired_thermal_table(5);
  MomentTable ph = oracles::paired_thermal_photon_table(5);
  CHECK(eval_criterion(criterion("E_001"), t) == Catch::Approx(-2.0).epsilon(1e-12));
  CHECK(eval_criterion(criterion("M_1001"), t) == Catch::Approx(-5.0).epsilon(1e-12));
  CHECK(eval_criterion(criterion("M_1100"), t) == Catch::Approx(43.0).epsilon(1e-12));
  CHECK(eval_criterion(criterion("D_2110_1111"), t) == Catch::Approx(-2.0).epsilon(1e-12));
  CHECK(eval_criterion(criterion("E_0110"), t) == Catch::Approx(5.0).epsilon(1e-12));
  // Photon-statistics entry in its own basis: same combination as E_001 after
  // conversion, so (3-1) + (3-1) - 2*3 = -2 on the paired thermal state.
  double n11 = eval_criterion(criterion("N_11"), ph);
  CHECK(n11 == Catch::Approx(-2.0).epsilon(1e-12));
  CHECK(n11 == Catch::Approx(eval_criterion(criterion("E_001"), t)).epsilon(1e-12));
}

TEST_CASE("factorized Poissonian closed forms") {
  for (auto [mu_s, mu_i] : {std::pair{1.0, 2.0}, std::pair{0.7, 1.9}}) {
    MomentTable t = oracles::poisson_pair_table(5, mu_s, mu_i);
    const double d2 = (mu_s - mu_i) * (mu_s - mu_i);
    CHECK(eval_criterion(criterion("E_001"), t) == Catch::Approx(d2).epsilon(1e-12));
    CHECK(eval_criterion(criterion("aD_210_111.s"), t) ==
          Catch::Approx(2.0 * mu_s * d2).epsilon(1e-12));
    CHECK(eval_criterion(criterion("aD_210_111.i"), t) ==
          Catch::Approx(2.0 * mu_i * d2).epsilon(1e-12));
    CHECK(eval_criterion(criterion("T_2100_1110"), t) ==
          Catch::Approx(2.0 * (mu_s + mu_i) * d2).epsilon(1e-12));
    CHECK(eval_criterion(criterion("D_2200_1111"), t) ==
          Catch::Approx((mu_s * mu_s - mu_i * mu_i) * (mu_s * mu_s - mu_i * mu_i))
              .epsilon(1e-12));
    CHECK(eval_criterion(criterion("M_001001"), t) == Catch::Approx(0.0).margin(1e-12));
  }
  // Majorization-ordered single-arm comparison on unequal Poissonians:
  // mu_s^4 + mu_i^4 - mu_s^3 mu_i - mu_s mu_i^3 = 7 at means 1 and 2.
  MomentTable t12 = oracles::poisson_pair_table(5, 1.0, 2.0);
  CHECK(eval_criterion(criterion("Emaj_40_31"), t12) == Catch::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("arm-suffixed entries swap under table transposition") {
  MomentTable t = oracles::random_table(31415);
  MomentTable tt = transposed(t);
  int pairs = 0;
  for (const auto& c : criterion_catalog()) {
    if (c.basis != MomentKind::intensity) continue;
    if (c.id.size() > 2 && c.id.compare(c.id.size() - 2, 2, ".s") == 0) {
      const CriterionSpec& mirror = criterion(c.id.substr(0, c.id.size() - 2) + ".i");
      double v = eval_criterion(c, t);
      double w = eval_criterion(mirror, tt);
      CHECK(v == Catch::Approx(w).epsilon(1e-12).margin(1e-12));
      ++pairs;
    }
  }
  CHECK(pairs >= 30);

  // Index-mirrored E entries pair up the same way.
  for (auto [a, b] : {std::pair{"E_101", "E_011"}, std::pair{"E_201", "E_021"},
                      std::pair{"E_301", "E_031"}, std::pair{"E_211", "E_121"},
                      std::pair{"E_102", "E_012"}}) {
    CHECK(eval_criterion(criterion(a), t) ==
          Catch::Approx(eval_criterion(criterion(b), tt)).epsilon(1e-12));
  }
  // Arm-symmetric entries are invariant.
  for (const char* id : {"E_001", "E_111", "E_002", "B_20_11", "M_1100"}) {
    CHECK(eval_criterion(criterion(id), t) ==
          Catch::Approx(eval_criterion(criterion(id), tt)).epsilon(1e-12));
  }
}

TEST_CASE("normalized values are scale invariant for homogeneous entries") {
  MomentTable t = oracles::random_table(906090);
  MomentTable photon = convert_moments(t, MomentKind::photon);
  MomentTable t2 = rescaled(t, 2.75);
  MomentTable photon2 = convert_moments(t2, MomentKind::photon);
  int checked = 0;
  for (const char* id : {"E_001", "E_301", "B_20_11", "aL_30_21.s", "D_2110_1111",
                         "T_2100_1110", "M_1100", "C_21_01", "Emaj_41_32"}) {
    const CriterionSpec& c = criterion(id);
    double n1 = normalized_criterion(c, eval_criterion(c, t), t, photon);
    double n2 = normalized_criterion(c, eval_criterion(c, t2), t2, photon2);
    CHECK(n1 == Catch::Approx(n2).epsilon(1e-9).margin(1e-12));
    ++checked;
  }
  CHECK(checked == 9);
}

TEST_CASE("photon-statistics normalization uses the factorized reference") {
  // Paired thermal: reference on factorized marginals is well away from zero.
  MomentTable ph = oracles::paired_thermal_photon_table(5);
  MomentTable in = oracles::paired_thermal_table(5);
  const CriterionSpec& n11 = criterion("N_11");
  double raw = eval_criterion(n11, ph);
  double norm = normalized_criterion(n11, raw, in, ph);
  CHECK(std::isfinite(norm));
  CHECK(norm != 0.0);

  // Equal-mean factorized Poissonian: the reference degenerates to zero and
  // the normalized value is flagged unevaluable rather than divided out.
  MomentTable pois = oracles::poisson_pair_table(5, 1.0, 1.0);
  MomentTable pois_ph = convert_moments(pois, MomentKind::photon);
  double raw2 = eval_criterion(n11, pois_ph);
  CHECK(raw2 == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::isnan(normalized_criterion(n11, raw2, pois, pois_ph)));
}

TEST_CASE("evaluation rejects basis and order mismatches") {
  MomentTable photon(5, MomentKind::photon);
  CHECK_THROWS_AS(eval_criterion(criterion("E_001"), photon), ValidationError);
  MomentTable small(2, MomentKind::intensity);
  CHECK_THROWS_AS(eval_criterion(criterion("E_301"), small), ValidationError);  // order 5
  MomentTable in(5, MomentKind::intensity);
  CHECK_THROWS_AS(eval_criterion(criterion("N_11"), in), ValidationError);

  // Zero mean with a nonzero homogeneous value cannot be normalized.
  MomentTable degenerate(5, MomentKind::intensity);
  degenerate.m[2][0] = 1.0;
  MomentTable degph = convert_moments(degenerate, MomentKind::photon);
  const CriterionSpec& e = criterion("E_001");
  CHECK_THROWS_AS(normalized_criterion(e, eval_criterion(e, degenerate), degenerate, degph),
                  ValidationError);
}

TEST_CASE("distribution-element criteria: ids, region, and closed forms") {
  CHECK(f_criterion_id(3, 4) == "F_3_4_1");

  JointDistribution d;
  d.kind = DistKind::photon_number;
  const int G = 30;  // wide enough that truncation is far below the tolerances
  d.probs = Matrix(G, G);
  // Factorized Poissonian with unequal means.
  const double mu_s = 1.0, mu_i = 2.0;
  std::vector<double> ps(G), pi(G);
  ps[0] = std::exp(-mu_s);
  pi[0] = std::exp(-mu_i);
  for (int n = 1; n < G; ++n) {
    ps[n] = ps[n - 1] * mu_s / n;
    pi[n] = pi[n - 1] * mu_i / n;
  }
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) d.probs(a, b) = ps[a] * pi[b];
  d.renormalize();

  auto region = default_f_region(d);
  CHECK(!region.empty());
  for (auto [k, l] : region) {
    CHECK(k + 2 < G);
    CHECK(l + 2 < G);
  }
  CHECK(std::set<std::pair<int, int>>(region.begin(), region.end()).size() == region.size());

  auto res = eval_f_criteria(d, region);
  REQUIRE(res.size() == region.size());
  for (const auto& fr : res) {
    REQUIRE(fr.evaluable);
    INFO(fr.id);
    // Closed form mu_s^k mu_i^l (mu_s-mu_i)^2, up to truncation.
    double expected = std::pow(mu_s, fr.k) * std::pow(mu_i, fr.l) * (mu_s - mu_i) * (mu_s - mu_i);
    CHECK(fr.value == Catch::Approx(expected).epsilon(1e-6));
    CHECK_FALSE(fr.violated);  // classical state: no negativity
    // Reference scale uses unit-p(0) Poissonians, so the normalized value of a
    // Poissonian input is its own p(0,0) = exp(-(mu_s+mu_i)).
    CHECK(fr.normalized == Catch::Approx(d.probs(0, 0)).epsilon(1e-6));
  }

  // Paired thermal B=1: the (0,0) element is negative (pair correlations).
  JointDistribution pt;
  pt.kind = DistKind::photon_number;
  pt.probs = Matrix(40, 40);
  for (int n = 0; n < 40; ++n) pt.probs(n, n) = std::pow(0.5, n + 1);
  pt.renormalize();
  auto one = eval_f_criteria(pt, {{0, 0}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].value == Catch::Approx(-1.0).epsilon(1e-10));
  CHECK(one[0].violated);

  // Cells without the 2-cell margin are rejected.
  CHECK_THROWS_AS(eval_f_criteria(pt, {{39, 39}}), ValidationError);
}

TEST_CASE("formula text reflects the term structure") {
  const CriterionSpec& e = criterion("E_001");
  CHECK(e.formula.find("<Ws") != std::string::npos);
  CHECK(e.formula.find("Wi") != std::string::npos);
  const CriterionSpec& n = criterion("N_11");
  CHECK(n.formula.find("<ns") != std::string::npos);
}
