#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/rng.hpp"

namespace towerstat {

/// Return-time law with tail τ(n) = P(φ ≥ n), truncated at h_max with the
/// remaining mass lumped on h_max.
class TailLaw {
 public:
  /// τ(n) = min(1, C n^-q + C2 n^-(q+eps)) for n ≤ h_max.
  static TailLaw power(double q, double C, std::int64_t h_max,
                       double epsilon = 0.0, double C2 = 0.0);
  /// Explicit law; pmf[h-1] = P(φ = h). `q` is only recorded.
  static TailLaw from_pmf(std::vector<double> pmf,
                          double q = std::numeric_limits<double>::quiet_NaN());

  double q() const { return q_; }
  double C() const { return C_; }
  double epsilon() const { return epsilon_; }
  double C2() const { return C2_; }
  std::int64_t h_max() const { return h_max_; }
  bool is_power_law() const { return power_; }

  /// τ(n); 1 for n ≤ 1 and 0 beyond h_max.
  double survival(std::int64_t n) const {
    if (n <= 1) return 1.0;
    if (n > h_max_) return 0.0;
    return (*tau_)[static_cast<std::size_t>(n - 1)];
  }
  double pmf(std::int64_t h) const {
    if (h < 1 || h > h_max_) return 0.0;
    return (*pmf_)[static_cast<std::size_t>(h - 1)];
  }
  /// E φ over the truncated law.
  double mean() const { return mean_; }
  double lumped_mass() const { return pmf(h_max_); }
  /// First n at which the min(1, ·) clipping stops binding.
  std::int64_t crossover() const { return crossover_; }
  /// sup over crossover ≤ n < h_max of n^{q+eps}|τ(n) - C n^-q|.
  double correction_constant() const { return correction_; }
  /// sup over crossover ≤ n < h_max of n^q τ(n).
  double realized_constant() const { return realized_; }

  /// Smallest h with τ(h+1) < u, for u in (0,1].
  std::int64_t invert(double u) const;
  std::int64_t sample(Rng& rng) const { return invert(uniform_open0(rng)); }

  /// τ(1..h_max+1), index n-1.
  const std::vector<double>& survival_table() const { return *tau_; }
  const std::vector<double>& pmf_table() const { return *pmf_; }

 private:
  TailLaw() = default;
  void finish();

  double q_ = 0, C_ = 0, epsilon_ = 0, C2_ = 0;
  std::int64_t h_max_ = 0;
  bool power_ = false;
  std::shared_ptr<const std::vector<double>> tau_, pmf_;
  double mean_ = 0;
  std::int64_t crossover_ = 1;
  double correction_ = 0, realized_ = 0;
};

/// Inverse-CDF sampler for a nonincreasing survival table s(n) = P(X ≥ n).
std::int64_t invert_survival(const std::vector<double>& surv, double u);

struct TowerPoint {
  int state = 0;
  std::int64_t height = 1;
  std::int64_t level = 0;

  bool operator==(const TowerPoint&) const = default;
};

/// Row of base-state transition probabilities for a branch (state, height).
using TransitionRule = std::function<Eigen::VectorXd(int state, std::int64_t height)>;

/// Full-branch tower: every excursion draws its height from the shared tail
/// law and its landing base state from the branch's transition row.
class TowerModel {
 public:
  explicit TowerModel(TailLaw tail);
  /// Height-independent base chain with stochastic rows `P`.
  TowerModel(TailLaw tail, const Eigen::MatrixXd& P);
  TowerModel(TailLaw tail, int base_states, const TransitionRule& rule);

  const TailLaw& tail() const { return tail_; }
  int base_states() const { return S_; }
  std::int64_t h_max() const { return tail_.h_max(); }
  /// μ(Y) = μ(Δ₀) = 1/E φ.
  double mu_Y() const { return mu_Y_; }
  double mean_return_time() const { return tail_.mean(); }
  /// Stationary law of the induced base chain (μ_Y restricted to states).
  const Eigen::VectorXd& base_distribution() const { return pi_; }

  Eigen::VectorXd transition_row(int state, std::int64_t height) const;
  /// μ_Y(Δ_{α,0}) for α = (state, height).
  double branch_mass(int state, std::int64_t height) const {
    return pi_(state) * tail_.pmf(height);
  }
  /// μ(Δ_{α,i}), the same for every level i < height.
  double level_mass(int state, std::int64_t height) const {
    return mu_Y_ * branch_mass(state, height);
  }
  /// Induced kernel Σ_h p_h row(s,h).
  const Eigen::MatrixXd& induced_kernel() const { return kernel_; }

  bool valid(const TowerPoint& x) const;
  TowerPoint iterate(const TowerPoint& x, Rng& rng) const;
  std::int64_t sample_return_time(Rng& rng) const { return tail_.sample(rng); }
  int sample_next_state(int state, std::int64_t height, Rng& rng) const;
  /// Draw from μ: column ∝ μ(Y) h p_h, then a uniform level.
  TowerPoint sample_stationary(Rng& rng) const;
  /// Size-biased column survival P(column height ≥ n) under μ, index n-1.
  const std::vector<double>& column_survival() const { return *column_surv_; }

 private:
  void finish();
  const double* row_ptr(int state, std::int64_t height) const;

  TailLaw tail_;
  int S_ = 1;
  bool height_dependent_ = false;
  // Cumulative rows: constant (S×S) or per height (h_max×S×S).
  std::vector<double> rows_, cum_rows_;
  Eigen::MatrixXd kernel_;
  Eigen::VectorXd pi_;
  double mu_Y_ = 1;
  std::shared_ptr<const std::vector<double>> column_surv_;
};

TowerModel build_tower(const TailLaw& tail, int base_states = 1,
                       const TransitionRule& rule = {});

}  // namespace towerstat
