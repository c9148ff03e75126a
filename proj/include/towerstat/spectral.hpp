#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/observables.hpp"
#include "towerstat/tower.hpp"

namespace towerstat {

using cdouble = std::complex<double>;

struct EigenEstimate {
  cdouble lambda{1.0, 0.0};
  /// λ - 1, computed without cancellation.
  cdouble deviation{0.0, 0.0};
  Eigen::VectorXcd xi;
  /// |λ₂| / |λ₁|; 0 for a single base state.
  double gap_ratio = 0;
  bool gap_collapse = false;
  int iterations = 0;
  bool converged = true;
};

/// Leading eigenvalue of L_t u = L(e^{i t f_Y} u) on functions of the base state.
/// S = 1 gives Σ_h p_h e^{i t f_Y(h)} directly; otherwise power iteration to 1e-12.
EigenEstimate perturbed_eigenvalue(const TowerModel& model, const InducedObservable& fY,
                                   double t);

struct SpectralCurve {
  std::vector<double> t;
  std::vector<cdouble> lambda;
  std::vector<cdouble> deviation;
  std::vector<double> gap_ratio;
  std::vector<Eigen::VectorXcd> xi;
};

SpectralCurve lambda_curve(const TowerModel& model, const InducedObservable& fY,
                           std::span<const double> t);
/// `count` log-spaced points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

struct StableConstantFit {
  cdouble c{0.0, 0.0};
  /// Second term d t^kappa picked by variable projection.
  cdouble d{0.0, 0.0};
  double kappa = 0;
  /// Slope of log|λ_t - 1 - c t^q| against log t.
  double residual_exponent = 0;
  /// Residuals at rounding level: exponent not measurable.
  bool machine_floor = false;
  /// Residual magnitudes increase with t.
  bool monotone_residuals = true;
  std::vector<double> residuals;
};

/// Fits λ_t - 1 = c t^q + d t^kappa with kappa ∈ (q, q + 2] chosen by golden
/// section on the projected residual; c is the reported constant.
StableConstantFit fit_stable_constant(const SpectralCurve& curve, double q, double epsilon);

}  // namespace towerstat
