#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace towerstat {

/// Nonnegative sequence c_0, ..., c_{N-1} with a declared decay exponent.
struct DecaySequence {
  std::vector<double> values;
  double q = 0;

  /// c_n = C (n+1)^-q.
  static DecaySequence power(std::size_t N, double q, double C = 1.0);

  std::size_t size() const { return values.size(); }
  /// sup_n (n+1)^q c_n.
  double realized_constant() const;
};

/// (c ⋆ d)_n = Σ_{i ≤ n} c_i d_{n-i}; the result carries min(q_c, q_d).
DecaySequence convolve(const DecaySequence& c, const DecaySequence& d);

enum class KaramataRegime {
  UpperTail,  // α < q: n^{q-α} Σ_{h>n} h^α c_h
  LowerSum,   // α > q: n^{q-α} Σ_{h<n} h^α c_h
  Critical    // α = q: Σ_{h<n} h^q c_h / log n
};

struct KaramataReport {
  KaramataRegime regime = KaramataRegime::UpperTail;
  double sup = 0;
  std::size_t argsup = 0;
  /// Normalised sums at n = 2, ..., N-1 (index n-2).
  std::vector<double> normalised;
};

/// Rejects a requested regime that does not match the sign of α - q.
KaramataReport karamata_check(const DecaySequence& c, double alpha, double q,
                              KaramataRegime regime);
/// Regime picked from α and q.
KaramataReport karamata_check(const DecaySequence& c, double alpha, double q);

/// Mu(n) = sup_h (2h+1)^-1 Σ_{|i-n| ≤ h} |u_i| for n in [-pad, len + pad),
/// returned at index n + pad.
std::vector<double> maximal_function(std::span<const double> u, std::size_t pad = 0);
double lp_norm(std::span<const double> u, double p);

/// Weights a_h given explicitly for h < head.size() and equal to
/// A (h+1)^-s beyond, so that infinite sums over h are enclosed exactly.
struct WeightSequence {
  std::vector<double> head;
  double A = 1.0;
  double s = 2.0;

  /// a_h = (h+1)^-s with the first `head_len` values stored.
  static WeightSequence power(double s, std::size_t head_len = 4096);

  double operator()(std::int64_t h) const;
  /// Lower and upper bounds for Σ_{h ≥ from} a_h (h+1)^beta (needs s - beta > 1).
  std::pair<double, double> moment_tail(std::int64_t from, double beta = 0.0) const;
};

/// Both sides of an inequality whose left side is an infinite sum; the
/// truncated part is exact and the remainder is enclosed in [lhs, lhs_hi].
struct InequalityRatio {
  double lhs = 0, lhs_hi = 0, rhs = 0;
  double ratio = 0, ratio_hi = 0;
};

/// Σ_n Σ_h a_h |Σ_{|i-n| ≤ h} u_i|^{2q-2} against (Σ u_n^2)^{q-1}, q > 2.
InequalityRatio check_ineq_q_gt_2(const WeightSequence& a, std::span<const double> u, double q);
/// The same sums at q = 2, where no uniform constant exists; exploratory.
InequalityRatio probe_ineq_q_eq_2(const WeightSequence& a, std::span<const double> u);

/// Σ_n Σ_h a_h |Σ_i u_i k_h(n-i)|^q against Σ |u_n|^q with
/// k_h(m) = min((h+1)/(1+|m|^{1+ε}), 1/(1+|m|^ε)). Windows n farther than
/// `pad` from the support enter only through the upper bound (pad = 0 picks max(len, 256)).
InequalityRatio check_ineq_q_lt_2(const WeightSequence& a, std::span<const double> u, double q,
                                  double eps, std::size_t pad = 0);

struct PowerCheck {
  double lhs = 0, rhs = 0;
  bool holds = true;
};
/// |Σ c_n u_n|^p ≤ (Σ c_n)^{p-1} Σ c_n |u_n|^p.
PowerCheck stable_power_check(std::span<const double> c, std::span<const double> u, double p);

/// |x|^r with fast paths for integer and half-integer r.
double abs_pow(double x, double r);

}  // namespace towerstat
