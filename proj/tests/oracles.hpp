#pragma once

// Independent cross-checks used by the test suite only.  Everything here is
// deliberately written from first principles (rational arithmetic, explicit
// permutation sums, direct series summation) rather than reusing the library
// internals, so a transcription slip in the shipped formulas cannot hide.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include <twinmom/criteria.hpp>
#include <twinmom/moments.hpp>

namespace oracles {

using BigRat = boost::multiprecision::cpp_rational;

// ------------------------------------------------------------ brute force
// Factorial-moment tables summed with exact rationals.

inline BigRat falling_big(long long n, int k) {
  BigRat r = 1;
  for (int j = 0; j < k; ++j) r *= BigRat(n - j);
  return r;
}

/// Paired single-mode thermal field with mean B = b_num/b_den photons:
/// both arms always carry the same photon number n, distributed as
/// p(n) = B^n / (1+B)^(n+1).  The series is cut once the geometric tail is
/// far below rational working precision of the requested double output.
inline twinmom::MomentTable paired_thermal_table(int order, long long b_num = 1,
                                                 long long b_den = 1, int n_cut = 320) {
  twinmom::MomentTable t(order, twinmom::MomentKind::intensity);
  const BigRat B(b_num, b_den);
  for (int k = 0; k <= order; ++k)
    for (int l = 0; l <= order - k; ++l) {
      BigRat acc = 0;
      BigRat w = BigRat(1) / (1 + B);  // p(0)
      for (long long n = 0; n <= n_cut; ++n) {
        acc += falling_big(n, k) * falling_big(n, l) * w;
        w *= B / (1 + B);
      }
      t.m[k][l] = acc.convert_to<double>();
    }
  return t;
}

/// Factorized Poissonian arms with means mu_s and mu_i: <W_s^k W_i^l> =
/// mu_s^k mu_i^l exactly.
inline twinmom::MomentTable poisson_pair_table(int order, double mu_s, double mu_i) {
  twinmom::MomentTable t(order, twinmom::MomentKind::intensity);
  for (int k = 0; k <= order; ++k)
    for (int l = 0; l <= order - k; ++l)
      t.m[k][l] = std::pow(mu_s, k) * std::pow(mu_i, l);
  return t;
}

/// Photon-number (raw) moments of the same paired thermal field, for checking
/// the basis conversion: <n_s^k n_i^l> with n_s = n_i = n.
inline twinmom::MomentTable paired_thermal_photon_table(int order, long long b_num = 1,
                                                        long long b_den = 1, int n_cut = 320) {
  twinmom::MomentTable t(order, twinmom::MomentKind::photon);
  const BigRat B(b_num, b_den);
  for (int k = 0; k <= order; ++k)
    for (int l = 0; l <= order - k; ++l) {
      BigRat acc = 0;
      BigRat w = BigRat(1) / (1 + B);
      for (long long n = 0; n <= n_cut; ++n) {
        BigRat pw = 1;
        for (int j = 0; j < k + l; ++j) pw *= n;
        acc += pw * w;
        w *= B / (1 + B);
      }
      t.m[k][l] = acc.convert_to<double>();
    }
  return t;
}

// ------------------------------------------------------- permutation sums
// The product-moment criteria all come from one majorization template: an
// exponent pattern and a weaker pattern it dominates, averaged over a product
// of per-variable measures.  Here the template is evaluated literally: every
// permutation of the exponent pattern (m! of them, duplicate arrangements
// counted) is assigned to the variables, each monomial is scored through the
// measure assignment, and the two sums are subtracted.  The shipped formula
// must be a fixed positive multiple of this difference.

enum class Slot { joint_lead, joint_follow, marg_s, marg_i };

struct MuirheadSpec {
  std::string id;
  std::vector<int> upper, lower;
  std::vector<Slot> slots;  // one per variable
};

inline std::vector<int> digits_of(const std::string& tok) {
  std::vector<int> d;
  for (char c : tok) {
    if (c < '0' || c > '9') throw std::runtime_error("bad pattern token: " + tok);
    d.push_back(c - '0');
  }
  return d;
}

/// Derives the measure template from a criterion id.  Returns false for ids
/// outside the majorization template (moment-difference families, matrix and
/// Cauchy-Schwarz forms, distribution-element criteria).
inline bool muirhead_spec_for(const std::string& full_id, MuirheadSpec& out) {
  std::string id = full_id;
  bool has_arm = false;
  Slot arm = Slot::marg_s;
  if (id.size() > 2 && id.compare(id.size() - 2, 2, ".s") == 0) {
    has_arm = true;
    arm = Slot::marg_s;
    id = id.substr(0, id.size() - 2);
  } else if (id.size() > 2 && id.compare(id.size() - 2, 2, ".i") == 0) {
    has_arm = true;
    arm = Slot::marg_i;
    id = id.substr(0, id.size() - 2);
  }

  auto us1 = id.find('_');
  if (us1 == std::string::npos) return false;
  auto us2 = id.find('_', us1 + 1);
  if (us2 == std::string::npos) return false;
  const std::string head = id.substr(0, us1);
  std::vector<int> upper, lower;
  try {
    upper = digits_of(id.substr(us1 + 1, us2 - us1 - 1));
    lower = digits_of(id.substr(us2 + 1));
  } catch (const std::runtime_error&) {
    return false;
  }
  if (upper.size() != lower.size()) return false;
  const std::size_t m = upper.size();

  std::vector<Slot> slots;
  if (head == "B" && m == 2) {
    slots = {Slot::marg_s, Slot::marg_i};
  } else if (head == "aL" && has_arm && m == 2) {
    slots = {arm, arm};
  } else if (head == "aB" && has_arm && m == 3) {
    slots = {Slot::marg_s, Slot::marg_i, arm};
  } else if (head == "aD" && has_arm && m == 3) {
    slots = {Slot::joint_lead, Slot::joint_follow, arm};
  } else if (head == "B" && m == 4) {
    slots = {Slot::marg_s, Slot::marg_i, Slot::marg_s, Slot::marg_i};
  } else if (head == "aB" && has_arm && m == 4) {
    slots = {Slot::marg_s, Slot::marg_i, arm, arm};
  } else if (head == "D" && m == 4) {
    slots = {Slot::joint_lead, Slot::joint_follow, Slot::joint_lead, Slot::joint_follow};
  } else if (head == "aT" && has_arm && m == 4) {
    slots = {Slot::joint_lead, Slot::joint_follow, arm, arm};
  } else if (head == "T" && m == 4) {
    slots = {Slot::joint_lead, Slot::joint_follow, Slot::marg_s, Slot::marg_i};
  } else {
    return false;
  }

  out.id = full_id;
  out.upper = std::move(upper);
  out.lower = std::move(lower);
  out.slots = std::move(slots);
  return true;
}

/// Scores one exponent assignment through the measure template.  Joint slots
/// pair up in order of appearance: each joint_lead consumes the next
/// joint_follow as the second index of one cross moment.
inline double score_assignment(const std::vector<int>& expo, const std::vector<Slot>& slots,
                               const twinmom::MomentTable& t) {
  double v = 1.0;
  int pending_lead = -1;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    switch (slots[i]) {
      case Slot::joint_lead:
        pending_lead = expo[i];
        break;
      case Slot::joint_follow:
        v *= t.at(pending_lead, expo[i]);
        pending_lead = -1;
        break;
      case Slot::marg_s:
        v *= t.at(expo[i], 0);
        break;
      case Slot::marg_i:
        v *= t.at(0, expo[i]);
        break;
    }
  }
  return v;
}

/// Full permutation sum (m! terms) of a pattern over the measure template.
inline double permutation_sum(const std::vector<int>& pattern, const std::vector<Slot>& slots,
                              const twinmom::MomentTable& t) {
  const std::size_t m = pattern.size();
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> expo(m);
  double acc = 0.0;
  do {
    for (std::size_t i = 0; i < m; ++i) expo[i] = pattern[idx[i]];
    acc += score_assignment(expo, slots, t);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return acc;
}

inline double muirhead_difference(const MuirheadSpec& spec, const twinmom::MomentTable& t) {
  return permutation_sum(spec.upper, spec.slots, t) -
         permutation_sum(spec.lower, spec.slots, t);
}

/// Random strictly-positive moment table; the product-moment identities are
/// polynomial in the entries, so arbitrary positive tables exercise them.
inline twinmom::MomentTable random_table(std::uint64_t seed, int order = 5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  twinmom::MomentTable t(order, twinmom::MomentKind::intensity);
  for (int k = 0; k <= order; ++k)
    for (int l = 0; l <= order - k; ++l) t.m[k][l] = (k == 0 && l == 0) ? 1.0 : std::exp(u(gen));
  return t;
}

}  // namespace oracles
