#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "towerstat/config.hpp"
#include "towerstat/observables.hpp"
#include "towerstat/report.hpp"
#include "towerstat/spectral.hpp"
#include "towerstat/stable.hpp"

namespace towerstat {

/// p* = 2q - 2 for q ≥ 2 and q for q < 2.
double phase_transition(double q);

/// Growth n^beta (log n)^gamma of ∫|S_n f|^p dμ for the worst f.
struct PredictedExponent {
  double beta = 0, gamma = 0, p_star = 0;
  /// e.g. "q>2, p<p*: n^{p/2}".
  std::string regime;
};
PredictedExponent predicted_exponents(double q, double p);

/// Observable of the configured kind; `n` is the tail-indicator threshold.
Observable make_observable(const TowerModel& model, const ObservableSpec& spec, std::int64_t n);

/// Normalisation a_n: n^{1/2} (q > 2), (n log n)^{1/2} (q = 2), n^{1/q} (q < 2).
double normalisation(double q, std::int64_t n);

/// Stable limit of S_n f / n^{1/q} for f = 1 - 1_Y/μ(Y), with c fitted from λ_t.
struct StableLimit {
  StableConstantFit fit;
  SpectralCurve curve;
  /// Limit of the base sums S_n^Y f_Y / n^{1/q}.
  StableLaw law_Y;
  /// Z = μ(Y)^{1/q} Z_Y.
  StableLaw law;
  double mu_Y = 0;
};
/// `model` should be truncated far beyond 1/t_lo.
StableLimit stable_limit(const TowerModel& model, const SpectralSpec& spectral, double q);

/// Exact μ(∪_{h ≥ 2n} ∪_{i < h/2} Δ_{h,i}); 0 once 2n exceeds h_max.
double lower_bound_mass(const TowerModel& model, std::int64_t n);

/// 1 + log Σ Lip_i - log (Σ Lip_i^r)^{1/r}.
double concentration_log_factor(std::span<const double> lip, double r);
/// Regime right-hand side for E|K - EK|^p (strong form; q < 2 uses the weak
/// bound Σ Lip^q, compared against the weak moment).
double concentration_rhs(double q, double p, std::span<const double> lip);

ExperimentReport run_tower_info(const ExperimentConfig& cfg);
ExperimentReport run_moment_scaling(const ExperimentConfig& cfg);
/// Rejects p ≥ p*.
ExperimentReport run_moment_convergence(const ExperimentConfig& cfg);
/// Requires q < 2.
ExperimentReport run_weak_moment_check(const ExperimentConfig& cfg);
ExperimentReport run_concentration(const ExperimentConfig& cfg);
ExperimentReport run_lower_bound_probe(const ExperimentConfig& cfg);
/// Requires q ∈ (1, 2).
ExperimentReport run_berry_esseen(const ExperimentConfig& cfg);
/// Renewal decay of ‖T_{n+1} - T_n‖ with N = max of the n grid.
ExperimentReport run_renewal(const ExperimentConfig& cfg);
/// Sampler against CDF for the law from_parameters(q, 1, 1).
ExperimentReport run_stable_check(const ExperimentConfig& cfg);

}  // namespace towerstat
