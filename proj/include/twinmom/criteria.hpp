#pragma once

// The criterion catalog: every intensity-moment and photon-number-moment
// inequality of the toolkit, represented as explicit rational-coefficient
// combinations of monomials in moment-table entries, plus the
// distribution-element family computed directly from probabilities.
//
// A criterion is "violated" (nonclassical / entangled, depending on the
// family) exactly when its raw value is negative.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "data.hpp"
#include "moments.hpp"

namespace twinmom {

// ------------------------------------------------------------------ model

enum class Family { E, Emaj, Epoly, B, L, D, T, M, C, N, F, Composite };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::E: return "E";
    case Family::Emaj: return "Emaj";
    case Family::Epoly: return "Epoly";
    case Family::B: return "B";
    case Family::L: return "L";
    case Family::D: return "D";
    case Family::T: return "T";
    case Family::M: return "M";
    case Family::C: return "C";
    case Family::N: return "N";
    case Family::F: return "F";
    case Family::Composite: return "Composite";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  static const std::map<std::string, Family> k = {
      {"E", Family::E},   {"Emaj", Family::Emaj}, {"Epoly", Family::Epoly},
      {"B", Family::B},   {"L", Family::L},       {"D", Family::D},
      {"T", Family::T},   {"M", Family::M},       {"C", Family::C},
      {"N", Family::N},   {"F", Family::F},       {"Composite", Family::Composite}};
  auto it = k.find(s);
  if (it == k.end()) throw ValidationError("unknown criterion family: " + s);
  return it->second;
}

/// One monomial: rational coefficient times a product of table entries.
struct Term {
  Rat coeff;
  std::vector<std::pair<int, int>> factors;  // (k,l) exponent pairs
};

/// A moment criterion: signed combination of moment monomials.
struct CriterionSpec {
  std::string id;
  Family family = Family::E;
  MomentKind basis = MomentKind::intensity;
  int order = 0;           // total moment order (max across terms)
  bool local = false;      // single-arm criterion
  bool redundant = false;  // derivable combination of other catalog entries
  std::vector<Term> terms;
  std::string formula;
};

// ---------------------------------------------------------- rational ops

namespace detail {

inline long long gcd_ll(long long a, long long b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a ? a : 1;
}

inline Rat rnorm(Rat r) {
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  long long g = gcd_ll(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

inline Rat radd(Rat a, Rat b) { return rnorm({a.num * b.den + b.num * a.den, a.den * b.den}); }
inline Rat rmul(Rat a, Rat b) { return rnorm({a.num * b.num, a.den * b.den}); }

}  // namespace detail

// ------------------------------------------------------------ term algebra

namespace detail {

inline void drop_unit_factors(std::vector<std::pair<int, int>>& f) {
  std::erase(f, std::pair<int, int>{0, 0});  // the (0,0) moment is identically 1
}

inline Term term(Rat c, std::vector<std::pair<int, int>> f) {
  drop_unit_factors(f);
  std::sort(f.begin(), f.end());
  return Term{rnorm(c), std::move(f)};
}

/// Merges like monomials with exact rational arithmetic; drops zeros.
inline std::vector<Term> merge_terms(std::vector<Term> ts) {
  std::map<std::vector<std::pair<int, int>>, Rat> acc;
  for (auto& t : ts) {
    drop_unit_factors(t.factors);
    std::sort(t.factors.begin(), t.factors.end());
    auto it = acc.find(t.factors);
    if (it == acc.end())
      acc.emplace(t.factors, rnorm(t.coeff));
    else
      it->second = radd(it->second, t.coeff);
  }
  std::vector<Term> out;
  for (auto& [f, c] : acc)
    if (c.num != 0) out.push_back(Term{c, f});
  return out;
}

inline void append_scaled(std::vector<Term>& dst, Rat c, const std::vector<Term>& src) {
  for (const auto& t : src) dst.push_back(Term{rmul(c, t.coeff), t.factors});
}

/// Multiplies every term by one extra table-entry factor.
inline std::vector<Term> times_entry(std::vector<Term> ts, std::pair<int, int> f) {
  for (auto& t : ts) {
    t.factors.push_back(f);
    std::sort(t.factors.begin(), t.factors.end());
  }
  return ts;
}

inline int term_degree(const Term& t) {
  int d = 0;
  for (auto [k, l] : t.factors) d += k + l;
  return d;
}

inline std::string render_entry(std::pair<int, int> kl, MomentKind basis) {
  auto pow_txt = [](const std::string& v, int p) {
    if (p == 0) return std::string();
    if (p == 1) return v;
    return v + "^" + std::to_string(p);
  };
  std::string a = basis == MomentKind::intensity ? "Ws" : "ns";
  std::string b = basis == MomentKind::intensity ? "Wi" : "ni";
  std::string sa = pow_txt(a, kl.first), sb = pow_txt(b, kl.second);
  std::string inner = sa + (sa.empty() || sb.empty() ? "" : " ") + sb;
  if (inner.empty()) inner = "1";
  return "<" + inner + ">";
}

inline std::string render_formula(const std::vector<Term>& ts, MomentKind basis) {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : ts) {
    Rat c = t.coeff;
    bool neg = c.num < 0;
    long long n = neg ? -c.num : c.num;
    if (first)
      out << (neg ? "-" : "");
    else
      out << (neg ? " - " : " + ");
    first = false;
    bool unit = (n == 1 && c.den == 1) && !t.factors.empty();
    if (!unit) {
      out << n;
      if (c.den != 1) out << "/" << c.den;
      if (!t.factors.empty()) out << " ";
    }
    for (std::size_t i = 0; i < t.factors.size(); ++i) out << render_entry(t.factors[i], basis);
  }
  if (first) out << "0";
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------- builder

namespace detail {

inline CriterionSpec make_spec(std::string id, Family fam, MomentKind basis, bool local,
                               bool redundant, std::vector<Term> ts) {
  CriterionSpec s;
  s.id = std::move(id);
  s.family = fam;
  s.basis = basis;
  s.local = local;
  s.redundant = redundant;
  s.terms = merge_terms(std::move(ts));
  int dmax = 0, dmin = std::numeric_limits<int>::max();
  for (const auto& t : s.terms) {
    dmax = std::max(dmax, term_degree(t));
    dmin = std::min(dmin, term_degree(t));
  }
  s.order = dmax;
  // Intensity-moment criteria must be homogeneous or normalization by a
  // power of the mean intensity is meaningless; a failure here is a
  // transcription bug in this file.
  if (basis == MomentKind::intensity && !s.terms.empty() && dmin != dmax)
    throw std::logic_error("inhomogeneous criterion: " + s.id);
  return s;
}

/// Marginal entry of arm `a` (0 = signal, 1 = idler) at order k.
inline std::pair<int, int> marg(int a, int k) {
  return a == 0 ? std::make_pair(k, 0) : std::make_pair(0, k);
}

inline std::string arm_suffix(int a) { return a == 0 ? ".s" : ".i"; }

// Central-moment product criterion <Ws^k Wi^l (Ws-<Ws>)^{2m} (Wi-<Wi>)^{2n}>
// expanded exactly by the binomial theorem.
inline std::vector<Term> epoly_terms(int k, int l, int m, int n) {
  std::vector<Term> ts;
  for (int j = 0; j <= 2 * m; ++j)
    for (int q = 0; q <= 2 * n; ++q) {
      long long c = binomial(2 * m, j) * binomial(2 * n, q);
      if ((j + q) % 2) c = -c;
      std::vector<std::pair<int, int>> f;
      f.emplace_back(k + 2 * m - j, l + 2 * n - q);
      for (int r = 0; r < j; ++r) f.emplace_back(1, 0);
      for (int r = 0; r < q; ++r) f.emplace_back(0, 1);
      ts.push_back(term(Rat(c), std::move(f)));
    }
  return ts;
}

inline std::vector<CriterionSpec> build_catalog() {
  std::vector<CriterionSpec> cat;
  auto add = [&](CriterionSpec s) {
    s.formula = render_formula(s.terms, s.basis);
    cat.push_back(std::move(s));
  };
  auto T = [](Rat c, std::vector<std::pair<int, int>> f) { return term(c, std::move(f)); };
  // Entry reference by id (for composite definitions below).
  auto ref = [&](const std::string& id) -> const CriterionSpec& {
    for (const auto& s : cat)
      if (s.id == id) return s;
    throw std::logic_error("catalog reference before definition: " + id);
  };

  const auto I = MomentKind::intensity;
  const auto P = MomentKind::photon;

  // --- E family: <Ws^k Wi^l (Ws-Wi)^{2m}> expanded binomially. ---------
  auto make_E = [&](int k, int l, int m) {
    std::vector<Term> ts;
    for (int j = 0; j <= 2 * m; ++j) {
      long long c = binomial(2 * m, j);
      if (j % 2) c = -c;
      ts.push_back(T(Rat(c), {{k + 2 * m - j, l + j}}));
    }
    std::string id = "E_" + std::to_string(k) + std::to_string(l) + std::to_string(m);
    add(make_spec(id, Family::E, I, false, false, std::move(ts)));
  };
  make_E(0, 0, 1);
  make_E(1, 0, 1);
  make_E(0, 1, 1);
  make_E(2, 0, 1);
  make_E(0, 2, 1);
  make_E(1, 1, 1);
  make_E(3, 0, 1);
  make_E(0, 3, 1);
  make_E(2, 1, 1);
  make_E(1, 2, 1);
  make_E(0, 0, 2);
  make_E(1, 0, 2);
  make_E(0, 1, 2);

  // --- Emaj: symmetrized moment-pair comparisons. ----------------------
  auto make_emaj = [&](int a, int b, int c, int d) {
    std::vector<Term> ts;
    if (a == b)
      ts.push_back(T(Rat(2), {{a, b}}));
    else {
      ts.push_back(T(Rat(1), {{a, b}}));
      ts.push_back(T(Rat(1), {{b, a}}));
    }
    if (c == d)
      ts.push_back(T(Rat(-2), {{c, d}}));
    else {
      ts.push_back(T(Rat(-1), {{c, d}}));
      ts.push_back(T(Rat(-1), {{d, c}}));
    }
    std::string id = "Emaj_" + std::to_string(a) + std::to_string(b) + "_" + std::to_string(c) +
                     std::to_string(d);
    add(make_spec(id, Family::Emaj, I, false, false, std::move(ts)));
  };
  make_emaj(2, 0, 1, 1);
  make_emaj(3, 0, 2, 1);
  make_emaj(4, 0, 3, 1);
  make_emaj(4, 0, 2, 2);
  make_emaj(3, 1, 2, 2);
  make_emaj(5, 0, 4, 1);
  make_emaj(5, 0, 3, 2);
  make_emaj(4, 1, 3, 2);

  // --- Epoly: central-moment product criteria (all mirrors included). --
  auto make_epoly = [&](int k, int l, int m, int n) {
    std::string id = "E_" + std::to_string(k) + std::to_string(l) + std::to_string(m) +
                     std::to_string(n);
    bool local = (l == 0 && n == 0) || (k == 0 && m == 0);
    add(make_spec(id, Family::Epoly, I, local, false, epoly_terms(k, l, m, n)));
  };
  make_epoly(0, 1, 1, 0);
  make_epoly(0, 2, 1, 0);
  make_epoly(0, 3, 1, 0);
  make_epoly(1, 1, 1, 0);
  make_epoly(1, 2, 1, 0);
  make_epoly(2, 1, 1, 0);
  make_epoly(0, 1, 2, 0);
  make_epoly(1, 0, 1, 1);
  make_epoly(0, 0, 1, 1);
  make_epoly(1, 0, 1, 0);
  make_epoly(2, 0, 1, 0);
  make_epoly(3, 0, 1, 0);
  make_epoly(0, 0, 2, 0);
  make_epoly(1, 0, 2, 0);
  // s<->i mirrors of the above (self-mirrored E_0011 listed once).
  make_epoly(1, 0, 0, 1);
  make_epoly(2, 0, 0, 1);
  make_epoly(3, 0, 0, 1);
  make_epoly(1, 1, 0, 1);
  make_epoly(2, 1, 0, 1);
  make_epoly(1, 2, 0, 1);
  make_epoly(1, 0, 0, 2);
  make_epoly(0, 1, 1, 1);
  make_epoly(0, 1, 0, 1);
  make_epoly(0, 2, 0, 1);
  make_epoly(0, 3, 0, 1);
  make_epoly(0, 0, 0, 2);
  make_epoly(0, 1, 0, 2);

  // --- B family: two-arm product criteria. -----------------------------
  add(make_spec("B_20_11", Family::B, I, false, false,
                {T(Rat(1), {{2, 0}}), T(Rat(1), {{0, 2}}), T(Rat(-2), {{1, 0}, {0, 1}})}));
  add(make_spec("B_30_21", Family::B, I, false, false,
                {T(Rat(1), {{3, 0}}), T(Rat(1), {{0, 3}}), T(Rat(-1), {{2, 0}, {0, 1}}),
                 T(Rat(-1), {{1, 0}, {0, 2}})}));
  add(make_spec("B_40_31", Family::B, I, false, false,
                {T(Rat(1), {{4, 0}}), T(Rat(1), {{0, 4}}), T(Rat(-1), {{3, 0}, {0, 1}}),
                 T(Rat(-1), {{1, 0}, {0, 3}})}));
  add(make_spec("B_31_22", Family::B, I, false, false,
                {T(Rat(1), {{3, 0}, {0, 1}}), T(Rat(1), {{1, 0}, {0, 3}}),
                 T(Rat(-2), {{2, 0}, {0, 2}})}));
  add(make_spec("B_50_41", Family::B, I, false, false,
                {T(Rat(1), {{5, 0}}), T(Rat(1), {{0, 5}}), T(Rat(-1), {{4, 0}, {0, 1}}),
                 T(Rat(-1), {{1, 0}, {0, 4}})}));
  add(make_spec("B_41_32", Family::B, I, false, false,
                {T(Rat(1), {{4, 0}, {0, 1}}), T(Rat(1), {{1, 0}, {0, 4}}),
                 T(Rat(-1), {{3, 0}, {0, 2}}), T(Rat(-1), {{2, 0}, {0, 3}})}));

  // --- L family: single-arm moment criteria. ---------------------------
  for (int a : {0, 1}) {
    auto w = [&](int k) { return marg(a, k); };
    auto sfx = arm_suffix(a);
    add(make_spec("aL_20_11" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(2)}), T(Rat(-1), {w(1), w(1)})}));
    add(make_spec("aL_30_21" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(3)}), T(Rat(-1), {w(2), w(1)})}));
    add(make_spec("aL_40_31" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(4)}), T(Rat(-1), {w(3), w(1)})}));
    add(make_spec("aL_31_22" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(3), w(1)}), T(Rat(-1), {w(2), w(2)})}));
    add(make_spec("aL_50_41" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(5)}), T(Rat(-1), {w(4), w(1)})}));
    add(make_spec("aL_41_32" + sfx, Family::L, I, true, false,
                  {T(Rat(1), {w(4), w(1)}), T(Rat(-1), {w(3), w(2)})}));
  }

  // --- B family, mixed single/two-arm members. --------------------------
  for (int a : {0, 1}) {
    auto w = [&](int k) { return marg(a, k); };
    auto sfx = arm_suffix(a);
    add(make_spec("aB_210_111" + sfx, Family::B, I, false, false,
                  {T(Rat(1), {w(2), w(1)}), T(Rat(1), {{2, 0}, {0, 1}}),
                   T(Rat(1), {{0, 2}, {1, 0}}), T(Rat(-3), {w(1), {1, 0}, {0, 1}})}));
    add(make_spec("aB_220_211" + sfx, Family::B, I, false, false,
                  {T(Rat(1), {w(2), w(2)}), T(Rat(2), {{2, 0}, {0, 2}}),
                   T(Rat(1), {w(1), w(1), w(2)}), T(Rat(-1), {w(1), w(1), {2, 0}}),
                   T(Rat(-1), {w(1), w(1), {0, 2}}), T(Rat(-2), {w(2), {1, 0}, {0, 1}})}));
    add(make_spec("aB_2110_1111" + sfx, Family::B, I, false, false,
                  {T(Rat(1), {w(1), w(1), {2, 0}}), T(Rat(1), {w(1), w(1), {0, 2}}),
                   T(Rat(2), {w(2), {1, 0}, {0, 1}}),
                   T(Rat(-4), {w(1), w(1), {1, 0}, {0, 1}})}));
  }
  add(make_spec("B_2110_1111", Family::B, I, false, false,
                {T(Rat(1), {{2, 0}, {0, 1}, {0, 1}}), T(Rat(1), {{1, 0}, {1, 0}, {0, 2}}),
                 T(Rat(2), {{2, 0}, {1, 0}, {0, 1}}), T(Rat(2), {{0, 2}, {1, 0}, {0, 1}}),
                 T(Rat(-6), {{1, 0}, {1, 0}, {0, 1}, {0, 1}})}));

  // --- D family. --------------------------------------------------------
  for (int a : {0, 1}) {
    auto w = [&](int k) { return marg(a, k); };
    auto sfx = arm_suffix(a);
    add(make_spec("aD_210_111" + sfx, Family::D, I, false, false,
                  {T(Rat(2), {w(2), w(1)}), T(Rat(1), {{2, 1}}), T(Rat(1), {{1, 2}}),
                   T(Rat(1), {{2, 0}, {0, 1}}), T(Rat(1), {{1, 0}, {0, 2}}),
                   T(Rat(-6), {w(1), {1, 1}})}));
    add(make_spec("aD_220_211" + sfx, Family::D, I, false, false,
                  {T(Rat(1), {w(2), w(2)}), T(Rat(1), {{2, 2}}), T(Rat(1), {{2, 0}, {0, 2}}),
                   T(Rat(-1), {w(1), {2, 1}}), T(Rat(-1), {w(1), {1, 2}}),
                   T(Rat(-1), {w(2), {1, 1}})}));
  }
  add(make_spec("D_2110_1111", Family::D, I, false, false,
                {T(Rat(1), {{2, 1}, {1, 0}}), T(Rat(1), {{2, 1}, {0, 1}}),
                 T(Rat(1), {{1, 2}, {1, 0}}), T(Rat(1), {{1, 2}, {0, 1}}),
                 T(Rat(1), {{1, 1}, {2, 0}}), T(Rat(1), {{1, 1}, {0, 2}}),
                 T(Rat(-6), {{1, 1}, {1, 1}})}));
  add(make_spec("D_2200_1111", Family::D, I, false, false,
                {T(Rat(1), {{2, 0}, {2, 0}}), T(Rat(2), {{2, 0}, {0, 2}}),
                 T(Rat(1), {{0, 2}, {0, 2}}), T(Rat(2), {{2, 2}}),
                 T(Rat(-6), {{1, 1}, {1, 1}})}));
  add(make_spec("D_4000_1111", Family::D, I, false, false,
                {T(Rat(1), {{4, 0}}), T(Rat(1), {{0, 4}}), T(Rat(-2), {{1, 1}, {1, 1}})}));

  // --- T family. --------------------------------------------------------
  for (int a : {0, 1}) {
    auto w = [&](int k) { return marg(a, k); };
    auto sfx = arm_suffix(a);
    add(make_spec("aT_2100_1110" + sfx, Family::T, I, false, false,
                  {T(Rat(6), {w(2), w(1)}), T(Rat(1), {{2, 1}}), T(Rat(1), {{1, 2}}),
                   T(Rat(2), {{2, 0}, {0, 1}}), T(Rat(2), {{1, 0}, {0, 2}}),
                   T(Rat(-6), {w(1), {1, 1}}), T(Rat(-3), {w(1), w(1), {1, 0}}),
                   T(Rat(-3), {w(1), w(1), {0, 1}})}));
    add(make_spec("aT_2200_2110" + sfx, Family::T, I, false, false,
                  {T(Rat(6), {w(2), w(2)}), T(Rat(2), {{2, 2}}), T(Rat(4), {{2, 0}, {0, 2}}),
                   T(Rat(-2), {w(1), w(1), w(2)}), T(Rat(-1), {w(1), w(1), {2, 0}}),
                   T(Rat(-1), {w(1), w(1), {0, 2}}), T(Rat(-2), {w(1), {2, 1}}),
                   T(Rat(-2), {w(1), {1, 2}}), T(Rat(-2), {w(2), {1, 1}}),
                   T(Rat(-2), {w(2), {1, 0}, {0, 1}})}));
    add(make_spec("aT_2110_1111" + sfx, Family::T, I, false, false,
                  {T(Rat(2), {w(2), w(1), w(1)}), T(Rat(2), {w(1), {2, 1}}),
                   T(Rat(2), {w(1), {1, 2}}), T(Rat(1), {w(1), w(1), {2, 0}}),
                   T(Rat(1), {w(1), w(1), {0, 2}}), T(Rat(2), {w(2), {1, 1}}),
                   T(Rat(2), {w(2), {1, 0}, {0, 1}}), T(Rat(-12), {w(1), w(1), {1, 1}})}));
  }
  add(make_spec("T_2100_1110", Family::T, I, false, false,
                {T(Rat(2), {{2, 0}, {1, 0}}), T(Rat(2), {{0, 2}, {0, 1}}), T(Rat(1), {{2, 1}}),
                 T(Rat(1), {{1, 2}}), T(Rat(3), {{2, 0}, {0, 1}}), T(Rat(3), {{1, 0}, {0, 2}}),
                 T(Rat(-3), {{1, 0}, {1, 1}}), T(Rat(-3), {{0, 1}, {1, 1}}),
                 T(Rat(-3), {{1, 0}, {1, 0}, {0, 1}}), T(Rat(-3), {{1, 0}, {0, 1}, {0, 1}})}));
  add(make_spec("T_2200_2110", Family::T, I, false, false,
                {T(Rat(2), {{2, 0}, {2, 0}}), T(Rat(2), {{0, 2}, {0, 2}}), T(Rat(2), {{2, 2}}),
                 T(Rat(6), {{2, 0}, {0, 2}}), T(Rat(-1), {{1, 0}, {2, 1}}),
                 T(Rat(-1), {{1, 0}, {1, 2}}), T(Rat(-1), {{0, 1}, {2, 1}}),
                 T(Rat(-1), {{0, 1}, {1, 2}}), T(Rat(-1), {{2, 0}, {1, 1}}),
                 T(Rat(-1), {{0, 2}, {1, 1}}), T(Rat(-2), {{2, 0}, {1, 0}, {0, 1}}),
                 T(Rat(-2), {{0, 2}, {1, 0}, {0, 1}}), T(Rat(-1), {{2, 0}, {0, 1}, {0, 1}}),
                 T(Rat(-1), {{1, 0}, {1, 0}, {0, 2}})}));
  add(make_spec("T_2110_1111", Family::T, I, false, false,
                {T(Rat(1), {{1, 0}, {2, 1}}), T(Rat(1), {{1, 0}, {1, 2}}),
                 T(Rat(1), {{0, 1}, {2, 1}}), T(Rat(1), {{0, 1}, {1, 2}}),
                 T(Rat(1), {{2, 0}, {1, 1}}), T(Rat(1), {{0, 2}, {1, 1}}),
                 T(Rat(2), {{2, 0}, {1, 0}, {0, 1}}), T(Rat(2), {{0, 2}, {1, 0}, {0, 1}}),
                 T(Rat(1), {{2, 0}, {0, 1}, {0, 1}}), T(Rat(1), {{1, 0}, {1, 0}, {0, 2}}),
                 T(Rat(-12), {{1, 0}, {0, 1}, {1, 1}})}));

  // --- M family: determinant-based criteria. ----------------------------
  add(make_spec("M_1100", Family::M, I, false, false,
                {T(Rat(1), {{2, 2}}), T(Rat(-1), {{1, 1}, {1, 1}})}));
  add(make_spec("M_1001", Family::M, I, false, false,
                {T(Rat(1), {{2, 0}, {0, 2}}), T(Rat(-1), {{1, 1}, {1, 1}})}));
  add(make_spec("M_001001", Family::M, I, false, false,
                {T(Rat(1), {{2, 0}, {0, 2}}), T(Rat(2), {{1, 1}, {1, 0}, {0, 1}}),
                 T(Rat(-1), {{1, 1}, {1, 1}}), T(Rat(-1), {{2, 0}, {0, 1}, {0, 1}}),
                 T(Rat(-1), {{1, 0}, {1, 0}, {0, 2}})}));

  // --- C family: negated Cauchy-Schwarz products. ------------------------
  auto make_C = [&](int a, int b, int c, int d) {
    std::string id = "C_" + std::to_string(a) + std::to_string(b) + "_" + std::to_string(c) +
                     std::to_string(d);
    add(make_spec(id, Family::C, I, false, false,
                  {T(Rat(1), {{a, b}, {c, d}}),
                   T(Rat(-1), {{(a + c) / 2, (b + d) / 2}, {(a + c) / 2, (b + d) / 2}})}));
  };
  make_C(0, 0, 2, 2);
  make_C(1, 0, 1, 2);
  make_C(2, 0, 0, 2);
  make_C(2, 1, 0, 1);

  // --- N family: photon-number-moment combinations. ----------------------
  {
    auto sym = [&](std::vector<Term>& ts, Rat c, int k) {
      ts.push_back(T(c, {{k, 0}}));
      ts.push_back(T(c, {{0, k}}));
    };
    std::vector<Term> n11;
    sym(n11, Rat(1), 2);
    sym(n11, Rat(-1), 1);
    n11.push_back(T(Rat(-2), {{1, 1}}));
    add(make_spec("N_11", Family::N, P, false, false, std::move(n11)));

    std::vector<Term> n21;
    sym(n21, Rat(1), 3);
    sym(n21, Rat(-2), 2);
    sym(n21, Rat(1), 1);
    n21.push_back(T(Rat(-1), {{2, 1}}));
    n21.push_back(T(Rat(-1), {{1, 2}}));
    add(make_spec("N_21", Family::N, P, false, false, std::move(n21)));

    std::vector<Term> n31;
    sym(n31, Rat(1), 4);
    sym(n31, Rat(-3), 3);
    sym(n31, Rat(5), 2);
    sym(n31, Rat(-3), 1);
    n31.push_back(T(Rat(-4), {{1, 1}}));
    n31.push_back(T(Rat(-1), {{3, 1}}));
    n31.push_back(T(Rat(-1), {{1, 3}}));
    add(make_spec("N_31", Family::N, P, false, false, std::move(n31)));

    std::vector<Term> n22;
    sym(n22, Rat(1), 4);
    sym(n22, Rat(-4), 3);
    sym(n22, Rat(7), 2);
    sym(n22, Rat(-4), 1);
    n22.push_back(T(Rat(-2), {{1, 1}}));
    n22.push_back(T(Rat(-2), {{2, 2}}));
    add(make_spec("N_22", Family::N, P, false, false, std::move(n22)));

    std::vector<Term> n41;
    sym(n41, Rat(1), 5);
    sym(n41, Rat(-4), 4);
    sym(n41, Rat(6), 3);
    sym(n41, Rat(2), 2);
    sym(n41, Rat(-5), 1);
    n41.push_back(T(Rat(-12), {{1, 1}}));
    n41.push_back(T(Rat(-1), {{4, 1}}));
    n41.push_back(T(Rat(-1), {{1, 4}}));
    add(make_spec("N_41", Family::N, P, false, false, std::move(n41)));

    std::vector<Term> n32;
    sym(n32, Rat(1), 5);
    sym(n32, Rat(-6), 4);
    sym(n32, Rat(15), 3);
    sym(n32, Rat(-17), 2);
    sym(n32, Rat(7), 1);
    n32.push_back(T(Rat(-1), {{3, 2}}));
    n32.push_back(T(Rat(-1), {{2, 3}}));
    add(make_spec("N_32", Family::N, P, false, false, std::move(n32)));
  }

  // --- Composite criteria: positive combinations of the entries above. ---
  auto compose = [&](const std::string& id,
                     std::vector<std::pair<Rat, std::string>> parts) {
    std::vector<Term> ts;
    for (auto& [c, rid] : parts) append_scaled(ts, c, ref(rid).terms);
    add(make_spec(id, Family::Composite, I, false, true, std::move(ts)));
  };
  // Composites multiplying a referenced criterion by a marginal moment.
  auto compose_scaled_entry = [&](const std::string& id, std::pair<int, int> entry,
                                  const std::string& scaled_id,
                                  std::vector<std::pair<Rat, std::string>> parts) {
    std::vector<Term> ts = times_entry(ref(scaled_id).terms, entry);
    for (auto& [c, rid] : parts) append_scaled(ts, c, ref(rid).terms);
    add(make_spec(id, Family::Composite, I, false, true, std::move(ts)));
  };

  for (int a : {0, 1}) {
    auto sfx = arm_suffix(a);
    compose("aB_200_110" + sfx, {{Rat(1), "aL_20_11" + sfx}, {Rat(1), "B_20_11"}});
    compose("aB_300_210" + sfx, {{Rat(1), "aL_30_21" + sfx}, {Rat(1), "B_30_21"}});
    compose("aB_400_310" + sfx, {{Rat(1), "aL_40_31" + sfx}, {Rat(1), "B_40_31"}});
    compose("aB_310_220" + sfx, {{Rat(1), "aL_31_22" + sfx}, {Rat(1), "B_31_22"}});
    compose("aB_2000_1100" + sfx, {{Rat(2), "aL_20_11" + sfx}, {Rat(1), "B_20_11"}});
    compose("aB_3000_2100" + sfx, {{Rat(2), "aL_30_21" + sfx}, {Rat(1), "B_30_21"}});
    compose_scaled_entry("aB_2100_1110" + sfx, marg(a, 1), "aL_20_11" + sfx,
                         {{Rat(1), "aB_210_111" + sfx}});
    compose("aB_4000_3100" + sfx, {{Rat(2), "aL_40_31" + sfx}, {Rat(1), "B_40_31"}});
    compose("aB_3100_2200" + sfx, {{Rat(2), "aL_31_22" + sfx}, {Rat(1), "B_31_22"}});
    compose_scaled_entry("aB_2200_2110" + sfx, marg(a, 2), "aL_20_11" + sfx,
                         {{Rat(1), "aB_220_211" + sfx}});
    compose("aD_200_110" + sfx,
            {{Rat(1), "aL_20_11" + sfx}, {Rat(1, 2), "E_001"}, {Rat(1, 2), "B_20_11"}});
    compose("aD_300_210" + sfx, {{Rat(2), "aL_30_21" + sfx},
                                 {Rat(1), "E_101"},
                                 {Rat(1), "E_011"},
                                 {Rat(1), "B_30_21"}});
    compose("aD_400_310" + sfx, {{Rat(2), "aL_40_31" + sfx},
                                 {Rat(1), "E_201"},
                                 {Rat(1), "E_111"},
                                 {Rat(1), "E_021"},
                                 {Rat(1), "B_40_31"}});
    compose("aD_310_220" + sfx,
            {{Rat(2), "aL_31_22" + sfx}, {Rat(1), "E_111"}, {Rat(1), "B_31_22"}});
    compose("aT_2000_1100" + sfx,
            {{Rat(6), "aL_20_11" + sfx}, {Rat(1), "E_001"}, {Rat(2), "B_20_11"}});
    compose("aT_3000_2100" + sfx, {{Rat(6), "aL_30_21" + sfx},
                                   {Rat(1), "E_101"},
                                   {Rat(1), "E_011"},
                                   {Rat(2), "B_30_21"}});
    compose("aT_4000_3100" + sfx, {{Rat(6), "aL_40_31" + sfx},
                                   {Rat(1), "E_201"},
                                   {Rat(1), "E_111"},
                                   {Rat(1), "E_021"},
                                   {Rat(2), "B_40_31"}});
    compose("aT_3100_2200" + sfx,
            {{Rat(6), "aL_31_22" + sfx}, {Rat(1), "E_111"}, {Rat(2), "B_31_22"}});
  }
  compose("B_2000_1100",
          {{Rat(1), "aL_20_11.s"}, {Rat(1), "aL_20_11.i"}, {Rat(2), "B_20_11"}});
  compose("B_3000_2100",
          {{Rat(1), "aL_30_21.s"}, {Rat(1), "aL_30_21.i"}, {Rat(2), "B_30_21"}});
  compose("B_2100_1110", {{Rat(1), "aB_210_111.s"}, {Rat(1), "aB_210_111.i"}});
  compose("B_4000_3100",
          {{Rat(1), "aL_40_31.s"}, {Rat(1), "aL_40_31.i"}, {Rat(2), "B_40_31"}});
  compose("B_3100_2200",
          {{Rat(1), "aL_31_22.s"}, {Rat(1), "aL_31_22.i"}, {Rat(2), "B_31_22"}});
  compose("B_2200_2110", {{Rat(1), "aB_220_211.s"}, {Rat(1), "aB_220_211.i"}});
  compose("D_2000_1100", {{Rat(1), "aL_20_11.s"},
                          {Rat(1), "aL_20_11.i"},
                          {Rat(1), "E_001"},
                          {Rat(1), "B_20_11"}});
  compose("D_3000_2100", {{Rat(1), "aL_30_21.s"},
                          {Rat(1), "aL_30_21.i"},
                          {Rat(1), "E_101"},
                          {Rat(1), "E_011"},
                          {Rat(1), "B_30_21"}});
  compose("D_2100_1110", {{Rat(1, 2), "aD_210_111.s"}, {Rat(1, 2), "aD_210_111.i"}});
  compose("D_4000_3100", {{Rat(1), "aL_40_31.s"},
                          {Rat(1), "aL_40_31.i"},
                          {Rat(1), "E_201"},
                          {Rat(1), "E_111"},
                          {Rat(1), "E_021"},
                          {Rat(1), "B_40_31"}});
  compose("D_3100_2200", {{Rat(1), "aL_31_22.s"},
                          {Rat(1), "aL_31_22.i"},
                          {Rat(1), "E_111"},
                          {Rat(1), "B_31_22"}});
  compose("D_2200_2110", {{Rat(1), "aD_220_211.s"}, {Rat(1), "aD_220_211.i"}});
  compose("T_2000_1100", {{Rat(1), "aL_20_11.s"},
                          {Rat(1), "aL_20_11.i"},
                          {Rat(1, 2), "E_001"},
                          {Rat(3, 2), "B_20_11"}});
  compose("T_3000_2100", {{Rat(2), "aL_30_21.s"},
                          {Rat(2), "aL_30_21.i"},
                          {Rat(1), "E_101"},
                          {Rat(1), "E_011"},
                          {Rat(3), "B_30_21"}});
  compose("T_4000_3100", {{Rat(2), "aL_40_31.s"},
                          {Rat(2), "aL_40_31.i"},
                          {Rat(1), "E_201"},
                          {Rat(1), "E_111"},
                          {Rat(1), "E_021"},
                          {Rat(3), "B_40_31"}});
  compose("T_3100_2200", {{Rat(2), "aL_31_22.s"},
                          {Rat(2), "aL_31_22.i"},
                          {Rat(1), "E_111"},
                          {Rat(3), "B_31_22"}});

  // Unique-id sanity check (a duplicate is a bug in this file).
  {
    std::map<std::string, int> seen;
    for (const auto& s : cat)
      if (++seen[s.id] > 1) throw std::logic_error("duplicate criterion id: " + s.id);
  }
  return cat;
}

}  // namespace detail

/// The immutable criterion catalog (built once).
inline const std::vector<CriterionSpec>& criterion_catalog() {
  static const std::vector<CriterionSpec> cat = detail::build_catalog();
  return cat;
}

/// Looks up a catalog entry; returns nullptr when absent.
inline const CriterionSpec* find_criterion(const std::string& id) {
  for (const auto& s : criterion_catalog())
    if (s.id == id) return &s;
  return nullptr;
}

/// Looks up a catalog entry; throws when absent.
inline const CriterionSpec& criterion(const std::string& id) {
  const CriterionSpec* s = find_criterion(id);
  if (!s) throw ValidationError("unknown criterion id: " + id);
  return *s;
}

// -------------------------------------------------------------- evaluation

/// Evaluates the term list with a custom entry accessor.
template <class EntryFn>
double eval_terms(const CriterionSpec& c, EntryFn&& entry) {
  Accumulator acc;
  for (const auto& t : c.terms) {
    double v = t.coeff.value();
    for (auto [k, l] : t.factors) v *= entry(k, l);
    acc.add(v);
  }
  return acc.value();
}

/// Raw criterion value on a moment table of the matching basis.
inline double eval_criterion(const CriterionSpec& c, const MomentTable& t) {
  if (t.kind != c.basis)
    throw ValidationError("criterion " + c.id + " requires a " +
                          to_string(c.basis) + "-moment table");
  if (c.order > t.K)
    throw ValidationError("criterion " + c.id + " needs moment order " +
                          std::to_string(c.order) + ", table has K=" + std::to_string(t.K));
  return eval_terms(c, [&](int k, int l) { return t.at(k, l); });
}

/// Same combination evaluated with all cross moments replaced by products
/// of the marginals of the same table; the reference scale for the N family.
inline double eval_reference_factorized(const CriterionSpec& c, const MomentTable& t) {
  if (t.kind != c.basis)
    throw ValidationError("criterion " + c.id + " requires a " +
                          to_string(c.basis) + "-moment table");
  return eval_terms(c, [&](int k, int l) {
    if (k > 0 && l > 0) return t.at(k, 0) * t.at(0, l);
    return t.at(k, l);
  });
}

/// Magnitude scale of the factorized reference (used to decide whether the
/// reference is too close to zero for division to mean anything).
inline double reference_magnitude(const CriterionSpec& c, const MomentTable& t) {
  Accumulator acc;
  for (const auto& term : c.terms) {
    double v = std::abs(term.coeff.value());
    for (auto [k, l] : term.factors)
      v *= std::abs(k > 0 && l > 0 ? t.at(k, 0) * t.at(0, l) : t.at(k, l));
    acc.add(v);
  }
  return acc.value();
}

/// Normalized value: homogeneous criteria divided by <W>^order with
/// <W> = (<W_s>+<W_i>)/2; N criteria divided by their factorized-marginals
/// reference. NaN when the normalization is degenerate (documented as
/// "unevaluable"); throws only for a zero mean with a nonzero value.
inline double normalized_criterion(const CriterionSpec& c, double value,
                                   const MomentTable& intensity, const MomentTable& photon) {
  if (c.family == Family::N) {
    double ref = eval_reference_factorized(c, photon);
    double mag = reference_magnitude(c, photon);
    if (!(std::abs(ref) > 1e-10 * std::max(1e-300, mag)))
      return std::numeric_limits<double>::quiet_NaN();
    return value / ref;
  }
  double w = intensity.mean_intensity();
  if (w <= 0.0) {
    if (value == 0.0) return 0.0;
    throw ValidationError("normalize: zero mean intensity with nonzero criterion " + c.id);
  }
  return value / std::pow(w, c.order);
}

// ------------------------------------------------- distribution-element F

/// Result of one distribution-element criterion at grid point (k,l).
struct FResult {
  std::string id;
  int k = 0, l = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double normalized = std::numeric_limits<double>::quiet_NaN();
  bool evaluable = false;
  bool violated = false;
};

inline std::string f_criterion_id(int k, int l) {
  return "F_" + std::to_string(k) + "_" + std::to_string(l) + "_1";
}

/// Grid points (k,l) on the five scan lines (k,k), (k+1,k), (k+2,k),
/// (k,k+1), (k,k+2) that fit in the distribution grid with the 2-cell margin.
inline std::vector<std::pair<int, int>> default_f_region(const JointDistribution& d,
                                                         int k_cap = 40) {
  const int R = static_cast<int>(d.probs.rows()), C = static_cast<int>(d.probs.cols());
  std::vector<std::pair<int, int>> cells;
  auto add = [&](int k, int l) {
    if (k >= 0 && l >= 0 && k + 2 < R && l + 2 < C) cells.emplace_back(k, l);
  };
  for (int k = 0; k <= k_cap; ++k) {
    add(k, k);
    add(k + 1, k);
    add(k + 2, k);
    add(k, k + 1);
    add(k, k + 2);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

/// Evaluates the distribution-element criteria on the given (k,l) cells:
///   value(k,l)  = q(k+2,l) + q(k,l+2) - 2 q(k+1,l+1),
///   q(a,b)      = a! b! p(a,b) / p(0,0).
/// Normalized form divides by the same combination for the factorized
/// Poissonian reference with the distribution's marginal means, which
/// reduces to value * p(0,0) / (mu_s^k mu_i^l (mu_s - mu_i)^2).
inline std::vector<FResult> eval_f_criteria(const JointDistribution& d,
                                            const std::vector<std::pair<int, int>>& cells) {
  const int R = static_cast<int>(d.probs.rows()), C = static_cast<int>(d.probs.cols());
  const double p00 = d.probs(0, 0);
  double mu_s = 0.0, mu_i = 0.0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      mu_s += r * d.probs(r, c);
      mu_i += c * d.probs(r, c);
    }

  std::vector<FResult> out;
  out.reserve(cells.size());
  for (auto [k, l] : cells) {
    FResult fr;
    fr.id = f_criterion_id(k, l);
    fr.k = k;
    fr.l = l;
    if (k < 0 || l < 0 || k + 2 >= R || l + 2 >= C)
      throw ValidationError("distribution-element criterion " + fr.id +
                            " outside grid (need a 2-cell margin)");
    if (p00 > 0.0) {
      auto q = [&](int a, int b) {
        double p = d.probs(a, b);
        if (p <= 0.0) return 0.0;
        if (a <= 20 && b <= 20)  // exact factorials where they fit
          return p / p00 * static_cast<double>(factorial_ll(a)) *
                 static_cast<double>(factorial_ll(b));
        return std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::log(p) -
                        std::log(p00));
      };
      double v = q(k + 2, l) + q(k, l + 2) - 2.0 * q(k + 1, l + 1);
      if (std::isfinite(v)) {
        fr.value = v;
        fr.evaluable = true;
        fr.violated = v < 0.0;
        if (mu_s > 0.0 && mu_i > 0.0 && mu_s != mu_i) {
          double logden = k * std::log(mu_s) + l * std::log(mu_i) +
                          2.0 * std::log(std::abs(mu_s - mu_i)) - std::log(p00);
          double norm = v * std::exp(-logden);
          if (std::isfinite(norm)) fr.normalized = norm;
        }
      }
    }
    out.push_back(std::move(fr));
  }
  return out;
}

}  // namespace twinmom
