#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <twinmom/ncd.hpp>

#include "oracles.hpp"

using namespace twinmom;

TEST_CASE("noise depth of E_001 on the paired thermal state equals sqrt(B)") {
  // Under additive noise of mean t the criterion becomes 2t^2 - 2B, so the
  // violation disappears exactly at t = sqrt(B).
  for (double B : {0.25, 0.49, 0.04, 0.9}) {
    MomentTable t = oracles::paired_thermal_table(
        5, static_cast<long long>(B * 100 + 0.5), 100);
    NcdResult r = compute_ncd(criterion("E_001"), t);
    INFO("B = " << B);
    CHECK(r.bracketed);
    CHECK(r.tau == Catch::Approx(std::sqrt(B)).margin(1e-6));
    CHECK(r.s_threshold == Catch::Approx(1.0 - 2.0 * r.tau).margin(1e-12));
    CHECK(r.id == "E_001");
  }
}

TEST_CASE("noise depth reaches the boundary exactly at B = 1") {
  MomentTable t = oracles::paired_thermal_table(5);
  NcdResult r = compute_ncd(criterion("E_001"), t);
  CHECK(r.bracketed);  // the value returns to zero exactly at t = 1
  CHECK(r.tau == Catch::Approx(1.0).margin(1e-6));
  CHECK(r.s_threshold == Catch::Approx(-1.0).margin(2e-6));
}

TEST_CASE("violations that survive the full noise range are capped and flagged") {
  // B = 4: the smoothed value 2t^2 - 8 stays negative on all of [0,1].
  MomentTable t = oracles::paired_thermal_table(5, 4, 1);
  NcdResult r = compute_ncd(criterion("E_001"), t);
  CHECK_FALSE(r.bracketed);
  CHECK(r.tau == 1.0);
  CHECK(r.s_threshold == -1.0);
}

TEST_CASE("polynomial-kernel depth matches its closed form on the paired thermal state") {
  // Kernel smoothing gives E_001 + 2t(<W_s>+<W_i>) + 2t^2 = -2B + 4Bt + 2t^2;
  // at B = 1 the root is sqrt(2) - 1.
  MomentTable t = oracles::paired_thermal_table(5);
  NcdResult r = compute_ncd(criterion("E_001"), t, SOrderingForm::laguerre_kernel);
  CHECK(r.bracketed);
  CHECK(r.tau == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-6));

  // The kernel form needs strictly less noise to wash out the violation.
  NcdResult e = compute_ncd(criterion("E_001"), t);
  CHECK(r.tau < e.tau);
}

TEST_CASE("requested tolerance controls the bracket width") {
  MomentTable t = oracles::paired_thermal_table(5, 1, 4);  // B = 0.25
  NcdResult coarse = compute_ncd(criterion("E_001"), t, SOrderingForm::exponential_noise, 1e-2);
  NcdResult fine = compute_ncd(criterion("E_001"), t, SOrderingForm::exponential_noise, 1e-10);
  CHECK(std::abs(coarse.tau - 0.5) < 1e-2);
  CHECK(std::abs(fine.tau - 0.5) < 1e-9);
}

TEST_CASE("non-violated or wrong-basis requests are rejected") {
  MomentTable pois = oracles::poisson_pair_table(5, 1.0, 2.0);
  CHECK_THROWS_AS(compute_ncd(criterion("E_001"), pois), ValidationError);  // value > 0

  MomentTable t = oracles::paired_thermal_table(5);
  CHECK_THROWS_AS(compute_ncd(criterion("N_11"), t), ValidationError);  // photon basis
}

TEST_CASE("deeper pairing survives more noise") {
  // tau grows with B: stronger two-arm correlation is more noise-robust.
  MomentTable weak = oracles::paired_thermal_table(5, 1, 10);
  MomentTable strong = oracles::paired_thermal_table(5, 8, 10);
  double tau_weak = compute_ncd(criterion("E_001"), weak).tau;
  double tau_strong = compute_ncd(criterion("E_001"), strong).tau;
  CHECK(tau_weak < tau_strong);
}
