#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace towerstat {

struct GrowthFit {
  double beta = 0, gamma = 0, log_C = 0;
  /// RMS residual of log v.
  double residual = 0;
  double beta_lo = 0, beta_hi = 0, gamma_lo = 0, gamma_hi = 0;
  /// γ was held at 0 (too few points or less than two decades).
  bool gamma_fixed = false;
  std::string note;
};

/// Least squares of log v = log C + β log n + γ log log n with a 95% residual
/// bootstrap interval.
GrowthFit fit_growth_exponent(std::span<const double> n, std::span<const double> v,
                              int bootstrap = 200, std::uint64_t seed = 1);

}  // namespace towerstat
