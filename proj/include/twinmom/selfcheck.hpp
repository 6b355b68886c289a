#pragma once

// Algebraic self-checks of the criterion catalog: the decomposition
// relations between catalog entries must hold on arbitrary moment tables.
// The combination recipes here are transcribed independently of the catalog
// construction (double-entry bookkeeping), so a slip in either place breaks
// the corresponding identity.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "moments.hpp"
#include "rng.hpp"

namespace twinmom {

struct IdentityCheck {
  std::string name;
  double max_rel_err = 0.0;  // worst over all tables tried
};

struct IdentitySuiteResult {
  std::vector<IdentityCheck> checks;
  int tables = 0;
  double tolerance = 1e-12;
  bool passed = true;
  double worst = 0.0;
  std::string worst_name;
};

namespace detail {

/// Moment table with pseudo-random positive entries (not necessarily
/// physical; the decomposition relations are algebraic identities that must
/// hold for any assignment).
inline MomentTable random_moment_table(std::uint64_t seed, int K = 5) {
  std::mt19937_64 gen(seed);
  MomentTable t;
  t.K = K;
  t.kind = MomentKind::intensity;
  t.m.assign(K + 1, {});
  for (int k = 0; k <= K; ++k) {
    t.m[k].assign(K + 1 - k, 0.0);
    for (int l = 0; l + k <= K; ++l)
      t.m[k][l] = (k == 0 && l == 0) ? 1.0 : std::exp(uniform53(gen) * 3.0 - 1.0);
  }
  return t;
}

}  // namespace detail

/// Runs the decomposition-identity suite on `tables` random moment tables.
inline IdentitySuiteResult run_identity_suite(int tables = 1000, std::uint64_t seed = 12345,
                                              double tolerance = 1e-12) {
  IdentitySuiteResult res;
  res.tables = tables;
  res.tolerance = tolerance;

  struct Rel {
    std::string name;
    // lhs and rhs evaluated on (intensity table, photon table)
    std::function<double(const MomentTable&, const MomentTable&)> lhs, rhs;
  };
  std::vector<Rel> rels;

  auto ev = [](const std::string& id, const MomentTable& t) {
    return eval_criterion(criterion(id), t);
  };
  auto iv = [ev](const std::string& id) {
    return [ev, id](const MomentTable& t, const MomentTable&) { return ev(id, t); };
  };
  auto pv = [ev](const std::string& id) {
    return [ev, id](const MomentTable&, const MomentTable& p) { return ev(id, p); };
  };
  auto combo = [ev](std::vector<std::pair<double, std::string>> parts) {
    return [ev, parts](const MomentTable& t, const MomentTable&) {
      Accumulator acc;
      for (const auto& [c, id] : parts) acc.add(c * ev(id, t));
      return acc.value();
    };
  };

  // Central-moment sum rules for the second-difference criteria.
  rels.push_back({"E_002 = E_201 + E_021 - 2 E_111", iv("E_002"),
                  combo({{1, "E_201"}, {1, "E_021"}, {-2, "E_111"}})});
  rels.push_back({"E_102 = E_301 + E_121 - 2 E_211", iv("E_102"),
                  combo({{1, "E_301"}, {1, "E_121"}, {-2, "E_211"}})});
  rels.push_back({"E_012 = E_211 + E_031 - 2 E_121", iv("E_012"),
                  combo({{1, "E_211"}, {1, "E_031"}, {-2, "E_121"}})});

  // Majorization-sum criteria reduce to E combinations.
  rels.push_back({"Emaj_20_11 = E_001", iv("Emaj_20_11"), combo({{1, "E_001"}})});
  rels.push_back({"Emaj_30_21 = E_101 + E_011", iv("Emaj_30_21"),
                  combo({{1, "E_101"}, {1, "E_011"}})});
  rels.push_back({"Emaj_40_31 = E_201 + E_111 + E_021", iv("Emaj_40_31"),
                  combo({{1, "E_201"}, {1, "E_111"}, {1, "E_021"}})});
  rels.push_back({"Emaj_40_22 = E_201 + 2 E_111 + E_021", iv("Emaj_40_22"),
                  combo({{1, "E_201"}, {2, "E_111"}, {1, "E_021"}})});
  rels.push_back({"Emaj_31_22 = E_111", iv("Emaj_31_22"), combo({{1, "E_111"}})});
  rels.push_back({"Emaj_50_41 = E_301 + E_211 + E_121 + E_031", iv("Emaj_50_41"),
                  combo({{1, "E_301"}, {1, "E_211"}, {1, "E_121"}, {1, "E_031"}})});
  rels.push_back({"Emaj_50_32 = E_301 + 2 E_211 + 2 E_121 + E_031", iv("Emaj_50_32"),
                  combo({{1, "E_301"}, {2, "E_211"}, {2, "E_121"}, {1, "E_031"}})});
  rels.push_back({"Emaj_41_32 = E_211 + E_121", iv("Emaj_41_32"),
                  combo({{1, "E_211"}, {1, "E_121"}})});

  // Photon-number-moment criteria equal E combinations after conversion.
  rels.push_back({"N_11 = E_001", pv("N_11"), combo({{1, "E_001"}})});
  rels.push_back({"N_21 = E_101 + E_011 + E_001", pv("N_21"),
                  combo({{1, "E_101"}, {1, "E_011"}, {1, "E_001"}})});
  rels.push_back({"N_31 = E_201 + E_021 + E_111 + 3(E_101 + E_011 + E_001)", pv("N_31"),
                  combo({{1, "E_201"},
                         {1, "E_021"},
                         {1, "E_111"},
                         {3, "E_101"},
                         {3, "E_011"},
                         {3, "E_001"}})});
  rels.push_back({"N_22 = E_201 + E_021 + 2 E_111 + 2(E_101 + E_011 + E_001)", pv("N_22"),
                  combo({{1, "E_201"},
                         {1, "E_021"},
                         {2, "E_111"},
                         {2, "E_101"},
                         {2, "E_011"},
                         {2, "E_001"}})});
  rels.push_back({"N_41 = E_301 + E_031 + E_211 + E_121 + 6(E_201+E_021+E_111) + 7(E_101+E_011+E_001)",
                  pv("N_41"),
                  combo({{1, "E_301"},
                         {1, "E_031"},
                         {1, "E_211"},
                         {1, "E_121"},
                         {6, "E_201"},
                         {6, "E_021"},
                         {6, "E_111"},
                         {7, "E_101"},
                         {7, "E_011"},
                         {7, "E_001"}})});
  rels.push_back({"N_32 = E_301 + E_031 + 2 E_211 + 2 E_121 + 4(E_201+E_021) + 7 E_111 + 4(E_101+E_011) + E_001",
                  pv("N_32"),
                  combo({{1, "E_301"},
                         {1, "E_031"},
                         {2, "E_211"},
                         {2, "E_121"},
                         {4, "E_201"},
                         {4, "E_021"},
                         {7, "E_111"},
                         {4, "E_101"},
                         {4, "E_011"},
                         {1, "E_001"}})});

  // Product-moment coincidences.
  rels.push_back({"C_00_22 = M_1100", iv("C_00_22"), combo({{1, "M_1100"}})});
  rels.push_back({"C_20_02 = M_1001", iv("C_20_02"), combo({{1, "M_1001"}})});

  // Central-moment product decomposition.
  rels.push_back({"E_0011 = E_0210 + <Wi>^2 aL_20_11.s - 2 <Wi> E_0110", iv("E_0011"),
                  [ev](const MomentTable& t, const MomentTable&) {
                    double mi = t.at(0, 1);
                    return ev("E_0210", t) + mi * mi * ev("aL_20_11.s", t) -
                           2.0 * mi * ev("E_0110", t);
                  }});

  // Redundant composite criteria: the printed combinations.
  for (int a : {0, 1}) {
    std::string x = a == 0 ? ".s" : ".i";
    auto scaled = [ev, a](int pow, const std::string& part, const std::string& rest) {
      return [ev, a, pow, part, rest](const MomentTable& t, const MomentTable&) {
        double w = a == 0 ? t.at(pow, 0) : t.at(0, pow);
        return w * ev(part, t) + ev(rest, t);
      };
    };
    rels.push_back({"aB_200_110" + x, iv("aB_200_110" + x),
                    combo({{1, "aL_20_11" + x}, {1, "B_20_11"}})});
    rels.push_back({"aB_300_210" + x, iv("aB_300_210" + x),
                    combo({{1, "aL_30_21" + x}, {1, "B_30_21"}})});
    rels.push_back({"aB_400_310" + x, iv("aB_400_310" + x),
                    combo({{1, "aL_40_31" + x}, {1, "B_40_31"}})});
    rels.push_back({"aB_310_220" + x, iv("aB_310_220" + x),
                    combo({{1, "aL_31_22" + x}, {1, "B_31_22"}})});
    rels.push_back({"aB_2000_1100" + x, iv("aB_2000_1100" + x),
                    combo({{2, "aL_20_11" + x}, {1, "B_20_11"}})});
    rels.push_back({"aB_3000_2100" + x, iv("aB_3000_2100" + x),
                    combo({{2, "aL_30_21" + x}, {1, "B_30_21"}})});
    rels.push_back({"aB_2100_1110" + x, iv("aB_2100_1110" + x),
                    scaled(1, "aL_20_11" + x, "aB_210_111" + x)});
    rels.push_back({"aB_4000_3100" + x, iv("aB_4000_3100" + x),
                    combo({{2, "aL_40_31" + x}, {1, "B_40_31"}})});
    rels.push_back({"aB_3100_2200" + x, iv("aB_3100_2200" + x),
                    combo({{2, "aL_31_22" + x}, {1, "B_31_22"}})});
    rels.push_back({"aB_2200_2110" + x, iv("aB_2200_2110" + x),
                    scaled(2, "aL_20_11" + x, "aB_220_211" + x)});
    rels.push_back({"aD_200_110" + x, iv("aD_200_110" + x),
                    combo({{1, "aL_20_11" + x}, {0.5, "E_001"}, {0.5, "B_20_11"}})});
    rels.push_back({"aD_300_210" + x, iv("aD_300_210" + x),
                    combo({{2, "aL_30_21" + x}, {1, "E_101"}, {1, "E_011"}, {1, "B_30_21"}})});
    rels.push_back({"aD_400_310" + x, iv("aD_400_310" + x),
                    combo({{2, "aL_40_31" + x},
                           {1, "E_201"},
                           {1, "E_111"},
                           {1, "E_021"},
                           {1, "B_40_31"}})});
    rels.push_back({"aD_310_220" + x, iv("aD_310_220" + x),
                    combo({{2, "aL_31_22" + x}, {1, "E_111"}, {1, "B_31_22"}})});
    rels.push_back({"aT_2000_1100" + x, iv("aT_2000_1100" + x),
                    combo({{6, "aL_20_11" + x}, {1, "E_001"}, {2, "B_20_11"}})});
    rels.push_back({"aT_3000_2100" + x, iv("aT_3000_2100" + x),
                    combo({{6, "aL_30_21" + x}, {1, "E_101"}, {1, "E_011"}, {2, "B_30_21"}})});
    rels.push_back({"aT_4000_3100" + x, iv("aT_4000_3100" + x),
                    combo({{6, "aL_40_31" + x},
                           {1, "E_201"},
                           {1, "E_111"},
                           {1, "E_021"},
                           {2, "B_40_31"}})});
    rels.push_back({"aT_3100_2200" + x, iv("aT_3100_2200" + x),
                    combo({{6, "aL_31_22" + x}, {1, "E_111"}, {2, "B_31_22"}})});
  }
  rels.push_back({"B_2000_1100", iv("B_2000_1100"),
                  combo({{1, "aL_20_11.s"}, {1, "aL_20_11.i"}, {2, "B_20_11"}})});
  rels.push_back({"B_3000_2100", iv("B_3000_2100"),
                  combo({{1, "aL_30_21.s"}, {1, "aL_30_21.i"}, {2, "B_30_21"}})});
  rels.push_back({"B_2100_1110", iv("B_2100_1110"),
                  combo({{1, "aB_210_111.s"}, {1, "aB_210_111.i"}})});
  rels.push_back({"B_4000_3100", iv("B_4000_3100"),
                  combo({{1, "aL_40_31.s"}, {1, "aL_40_31.i"}, {2, "B_40_31"}})});
  rels.push_back({"B_3100_2200", iv("B_3100_2200"),
                  combo({{1, "aL_31_22.s"}, {1, "aL_31_22.i"}, {2, "B_31_22"}})});
  rels.push_back({"B_2200_2110", iv("B_2200_2110"),
                  combo({{1, "aB_220_211.s"}, {1, "aB_220_211.i"}})});
  rels.push_back({"D_2000_1100", iv("D_2000_1100"),
                  combo({{1, "aL_20_11.s"}, {1, "aL_20_11.i"}, {1, "E_001"}, {1, "B_20_11"}})});
  rels.push_back(
      {"D_3000_2100", iv("D_3000_2100"),
       combo({{1, "aL_30_21.s"}, {1, "aL_30_21.i"}, {1, "E_101"}, {1, "E_011"}, {1, "B_30_21"}})});
  rels.push_back({"D_2100_1110", iv("D_2100_1110"),
                  combo({{0.5, "aD_210_111.s"}, {0.5, "aD_210_111.i"}})});
  rels.push_back({"D_4000_3100", iv("D_4000_3100"),
                  combo({{1, "aL_40_31.s"},
                         {1, "aL_40_31.i"},
                         {1, "E_201"},
                         {1, "E_111"},
                         {1, "E_021"},
                         {1, "B_40_31"}})});
  rels.push_back(
      {"D_3100_2200", iv("D_3100_2200"),
       combo({{1, "aL_31_22.s"}, {1, "aL_31_22.i"}, {1, "E_111"}, {1, "B_31_22"}})});
  rels.push_back({"D_2200_2110", iv("D_2200_2110"),
                  combo({{1, "aD_220_211.s"}, {1, "aD_220_211.i"}})});
  rels.push_back({"T_2000_1100", iv("T_2000_1100"),
                  combo({{1, "aL_20_11.s"}, {1, "aL_20_11.i"}, {0.5, "E_001"}, {1.5, "B_20_11"}})});
  rels.push_back(
      {"T_3000_2100", iv("T_3000_2100"),
       combo({{2, "aL_30_21.s"}, {2, "aL_30_21.i"}, {1, "E_101"}, {1, "E_011"}, {3, "B_30_21"}})});
  rels.push_back({"T_4000_3100", iv("T_4000_3100"),
                  combo({{2, "aL_40_31.s"},
                         {2, "aL_40_31.i"},
                         {1, "E_201"},
                         {1, "E_111"},
                         {1, "E_021"},
                         {3, "B_40_31"}})});
  rels.push_back(
      {"T_3100_2200", iv("T_3100_2200"),
       combo({{2, "aL_31_22.s"}, {2, "aL_31_22.i"}, {1, "E_111"}, {3, "B_31_22"}})});

  for (const Rel& r : rels) res.checks.push_back({r.name, 0.0});

  for (int i = 0; i < tables; ++i) {
    MomentTable mi = detail::random_moment_table(seed + static_cast<std::uint64_t>(i));
    MomentTable mp = convert_moments(mi, MomentKind::photon);
    for (std::size_t k = 0; k < rels.size(); ++k) {
      double lhs = rels[k].lhs(mi, mp);
      double rhs = rels[k].rhs(mi, mp);
      double rel = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
      res.checks[k].max_rel_err = std::max(res.checks[k].max_rel_err, rel);
    }
  }

  for (const IdentityCheck& c : res.checks) {
    if (c.max_rel_err > res.worst) {
      res.worst = c.max_rel_err;
      res.worst_name = c.name;
    }
    if (c.max_rel_err > tolerance) res.passed = false;
  }
  return res;
}

}  // namespace twinmom
