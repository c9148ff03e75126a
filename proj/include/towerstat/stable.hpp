#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "towerstat/rng.hpp"

namespace towerstat {

/// Totally asymmetric stable law with E e^{itZ} = exp(c (scale t)^q) for t > 0.
struct StableLaw {
  double q = 2.0;
  std::complex<double> c{-1.0, 0.0};
  double scale = 1.0;

  /// Classical parameters: c = -σ^q (1 - iβ tan(πq/2)).
  static StableLaw from_parameters(double q, double sigma, double beta);

  /// c scale^q.
  std::complex<double> effective_c() const;
  /// σ and β of the classical parameterisation (location 0).
  double sigma() const;
  double beta() const;
  std::complex<double> characteristic(double t) const;
};

void validate(const StableLaw& law);

struct QuadratureValue {
  double value = 0;
  double error = 0;
  bool converged = true;
};

/// P(Z > s) by Gil-Pelaez inversion along a rotated ray, uniform in |s|.
QuadratureValue stable_survival_checked(const StableLaw& law, double s);
double stable_survival(const StableLaw& law, double s);
/// P(Z ≤ s).
double stable_cdf(const StableLaw& law, double s);
/// Inverse of stable_cdf by bracketing and bisection.
double stable_quantile(const StableLaw& law, double u);
/// E|Z|^p for 0 < p < q from the characteristic function.
double stable_abs_moment(const StableLaw& law, double p);

/// Chambers–Mallows–Stuck draw.
double sample_stable(const StableLaw& law, Rng& rng);
std::vector<double> sample_stable(const StableLaw& law, std::size_t n, std::uint64_t seed);

/// CDF tabulated on [F⁻¹(tail), F⁻¹(1 - tail)], uniform in asinh(s/σ), with
/// linear interpolation; direct evaluation outside the grid.
class TabulatedCdf {
 public:
  TabulatedCdf(const StableLaw& law, int points = 4001, double tail = 1e-3);
  double operator()(double s) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  StableLaw law_;
  double lo_, hi_, step_, scale_;
  std::vector<double> values_;
};

}  // namespace towerstat
