#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace towerstat {

struct MomentEstimate {
  double estimate = 0;
  double stderr_ = 0;
  /// Top 0.1% of samples carry more than half of the estimate.
  bool tail_dominated = false;
};

/// Mean of w_i |x_i|^p / N (w = 1 when `weights` is empty), with a
/// 100-resample bootstrap standard error.
MomentEstimate strong_moment(std::span<const double> samples, double p,
                             std::span<const double> weights = {}, int bootstrap = 100,
                             std::uint64_t seed = 1);

/// sup_s s^p P(|X| > s) for the (weighted) empirical law, attained just
/// below an order statistic; only levels exceeded by at least √N samples count.
double weak_moment(std::span<const double> samples, double p,
                   std::span<const double> weights = {});

/// Empirical P(|X| > s) for each s (weights as in strong_moment).
std::vector<double> empirical_tail(std::span<const double> samples, std::span<const double> s,
                                   std::span<const double> weights = {});

/// sup_i |F_emp - F| over both sides of each order statistic.
double kolmogorov_distance(std::span<const double> samples,
                           const std::function<double(double)>& cdf);
double kolmogorov_distance_two_sample(std::span<const double> a, std::span<const double> b);
/// DKW radius at confidence 1 - alpha.
double dkw_bound(std::size_t n, double alpha = 0.05);

enum class MartingaleForm {
  BurkholderRosenthal,  // Q ≥ 2
  VonBahrEsseen         // Q ∈ (1, 2), weak norms
};

struct MartingaleProbe {
  MartingaleForm form = MartingaleForm::BurkholderRosenthal;
  double lhs = 0, rhs = 0, ratio = 0;
};

/// D is replicas × k. Burkholder–Rosenthal: E|Σ D_k|^Q against
/// (Σ_k a_k)^{Q/2} + Σ_k b_k with a_k = ‖E(D_k² | F_{k+1})‖_∞ and
/// b_k = ‖E(|D_k|^Q | F_{k+1})‖_∞ (column means of D² and |D|^Q when not given).
/// von Bahr–Esseen: ‖Σ D_k‖^Q_{Q,w} against Σ_k ‖D_k‖^Q_{Q,w}.
MartingaleProbe martingale_inequality_probe(const Eigen::MatrixXd& D, double Q, MartingaleForm form,
                                            std::span<const double> cond2 = {},
                                            std::span<const double> condQ = {});

}  // namespace towerstat
