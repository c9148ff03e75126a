#include <doctest.h>

#include <cmath>

#include "towerstat/observables.hpp"
#include "towerstat/spectral.hpp"

using namespace towerstat;

TEST_CASE("perturbed eigenvalue") {
  const TowerModel two = build_tower(TailLaw::from_pmf({0.5, 0.5}));
  const InducedObservable fY = induce(two, appendix_observable(two));
  CHECK(std::abs(perturbed_eigenvalue(two, fY, 0.0).lambda - cdouble(1.0, 0.0)) < 1e-15);
  for (double t : {0.01, 0.3, 1.0, 2.5}) {
    const EigenEstimate e = perturbed_eigenvalue(two, fY, t);
    CHECK(e.lambda.real() == doctest::Approx(std::cos(t / 2)).epsilon(1e-14));
    CHECK(std::abs(e.lambda.imag()) < 1e-14);
    CHECK(std::abs(e.deviation - (e.lambda - 1.0)) < 1e-14);
  }

  // Two base states: power iteration against the dense eigenvalue of the twisted kernel.
  const TowerModel multi = build_tower(TailLaw::from_pmf({0.25, 0.5, 0.25}), 2,
                                       [](int s, std::int64_t h) {
                                         Eigen::VectorXd row(2);
                                         row << 0.2 + 0.1 * s + 0.1 * double(h), 0.0;
                                         row(1) = 1.0 - row(0);
                                         return row;
                                       });
  const InducedObservable gY = induce(multi, appendix_observable(multi));
  const double t = 0.7;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2, 2);
  for (int s = 0; s < 2; ++s)
    for (std::int64_t h = 1; h <= 3; ++h)
      for (int s2 = 0; s2 < 2; ++s2)
        M(s, s2) += multi.tail().pmf(h) * std::exp(cdouble(0, t * gY(h))) *
                    multi.transition_row(s, h)(s2);
  const Eigen::VectorXcd ev = M.eigenvalues();
  const cdouble top = std::abs(ev(0)) > std::abs(ev(1)) ? ev(0) : ev(1);
  CHECK(std::abs(perturbed_eigenvalue(multi, gY, t).lambda - top) < 1e-10);
}

TEST_CASE("stable constant fit on synthetic curves") {
  const double q = 1.5;
  const cdouble c0(-2.0, -1.3);
  SpectralCurve exact, perturbed;
  for (double t : log_grid(1e-4, 1e-2, 24)) {
    const cdouble dev = c0 * std::pow(t, q);
    exact.t.push_back(t);
    exact.deviation.push_back(dev);
    exact.lambda.push_back(1.0 + dev);
    perturbed.t.push_back(t);
    perturbed.deviation.push_back(dev + t * t);
    perturbed.lambda.push_back(1.0 + dev + t * t);
  }
  const StableConstantFit a = fit_stable_constant(exact, q, 0.5);
  CHECK(std::abs(a.c - c0) < 1e-8);
  CHECK(a.machine_floor);

  const StableConstantFit b = fit_stable_constant(perturbed, q, 0.5);
  CHECK(b.residual_exponent == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::abs(b.c - c0) < 1e-6);
}

TEST_CASE("lambda_t expansion from exact tail sums") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 10000000, 0.5, 0.5));
  const InducedObservable fY = induce(model, appendix_observable(model));
  const auto t = log_grid(1e-4, 1e-2, 24);
  const StableConstantFit fit = fit_stable_constant(lambda_curve(model, fY, t), 1.5, 0.5);
  CHECK(fit.c.real() < 0);
  CHECK(fit.residual_exponent >= 1.5 + 0.5 - 0.15);
}
