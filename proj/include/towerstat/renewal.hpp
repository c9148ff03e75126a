#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/tower.hpp"

namespace towerstat {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// R_0, ..., R_N with R_0 = 0 and R_n[s', s] = Σ_{h_α = n, α from s} π_s p_n row(s')/π_{s'}.
/// Operators act on functions of the base state (column vectors).
std::vector<Eigen::MatrixXd> first_return_operators(const TowerModel& model, int N);

/// T_0 = I, T_n = Σ_{k=1}^n R_k T_{n-k}.
template <typename Scalar>
std::vector<DenseMatrix<Scalar>> renewal_sequence(const std::vector<DenseMatrix<Scalar>>& R,
                                                  int N) {
  if (R.empty()) return {};
  const auto S = R.front().rows();
  if (static_cast<int>(R.size()) <= N) N = static_cast<int>(R.size()) - 1;
  std::vector<DenseMatrix<Scalar>> T;
  T.reserve(static_cast<std::size_t>(N) + 1);
  T.push_back(DenseMatrix<Scalar>::Identity(S, S));
  for (int n = 1; n <= N; ++n) {
    DenseMatrix<Scalar> acc = DenseMatrix<Scalar>::Zero(S, S);
    for (int k = 1; k <= n; ++k) acc.noalias() += R[k] * T[n - k];
    T.push_back(std::move(acc));
  }
  return T;
}

/// Scalar renewal u_0 = 1, u_n = Σ_{k=1}^n r_k u_{n-k} (extended precision internally).
std::vector<double> scalar_renewal_sequence(std::span<const double> r, int N);

/// Induced sup norm: max absolute row sum.
template <typename Derived>
double operator_norm(const Eigen::MatrixBase<Derived>& A) {
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Π u = (Σ_s π_s u_s) 𝟙.
Eigen::MatrixXd averaging_projection(const TowerModel& model);

struct RenewalData {
  std::vector<Eigen::MatrixXd> R, T, E;
  Eigen::MatrixXd Pi;
  std::vector<double> norm_R, norm_increment, norm_deviation;
  /// sup_n ‖R_n‖ / μ_Y(φ = n).
  double R_constant = 0;
};

RenewalData compute_renewal(const TowerModel& model, int N);

struct DecayReport {
  int window_lo = 0, window_hi = 0;
  double slope_increment = 0, slope_deviation = 0;
  /// sup over the window of n^q times the norm.
  double constant_increment = 0, constant_deviation = 0;
  bool exact_increment = false, exact_deviation = false;
  /// Decay faster than any power across the window.
  bool superpolynomial = false;
};

/// Log-log slopes of ‖T_{n+1} - T_n‖ and ‖T_n - Π T_n Π‖ over [lo, hi]
/// (defaults: [N/10, N-1]).
DecayReport renewal_decay_report(const std::vector<Eigen::MatrixXd>& T, const Eigen::MatrixXd& Pi,
                                 double q, int lo = 0, int hi = 0);

/// Least-squares slope of log y against log x over positive entries.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace towerstat
