#include <doctest.h>

#include <cmath>
#include <random>

#include "towerstat/fit.hpp"
#include "towerstat/moments.hpp"
#include "towerstat/rng.hpp"
#include "towerstat/stable.hpp"

using namespace towerstat;

TEST_CASE("strong and weak moments") {
  const std::vector<double> zeros(100, 0.0), pm{-1.0, 1.0}, one{1.0};
  CHECK(strong_moment(zeros, 2.0).estimate == 0.0);
  CHECK(strong_moment(pm, 2.0).estimate == doctest::Approx(1.0));
  CHECK(weak_moment(one, 1.5) == doctest::Approx(1.0));
  CHECK(weak_moment(pm, 2.0) == doctest::Approx(1.0));

  Rng rng(21);
  std::normal_distribution<double> normal;
  std::vector<double> g(1000000);
  for (double& x : g) x = normal(rng);
  const MomentEstimate m2 = strong_moment(g, 2.0);
  CHECK(std::abs(m2.estimate - 1.0) < 0.01);
  CHECK(m2.stderr_ > 0);
  CHECK(m2.stderr_ < 0.01);

  // Pareto(q): survival s^-q on [1, ∞), so sup_s s^q P(X > s) = 1.
  const double q = 1.5;
  std::vector<double> pareto(1000000);
  for (double& x : pareto) x = std::pow(uniform_open0(rng), -1.0 / q);
  const double w = weak_moment(pareto, q);
  CHECK(w >= 0.9);
  CHECK(w <= 1.1);

  // Weak moments never exceed strong ones on the same empirical law.
  for (const auto* s : {&g, &pareto})
    for (double p : {1.0, 1.2, 2.0})
      CHECK(weak_moment(*s, p) <= strong_moment(*s, p, {}, 10).estimate * (1 + 1e-12));

  // Weights act as likelihood ratios.
  const std::vector<double> xs{1.0, 2.0}, ws{2.0, 0.0};
  CHECK(strong_moment(xs, 2.0, ws).estimate == doctest::Approx(1.0));
}

TEST_CASE("Kolmogorov distances") {
  const auto uniform_cdf = [](double s) { return std::clamp(s, 0.0, 1.0); };
  const std::vector<double> median{0.5}, above(10, 1e9);
  CHECK(kolmogorov_distance(median, uniform_cdf) == doctest::Approx(0.5));
  CHECK(kolmogorov_distance(above, uniform_cdf) == doctest::Approx(1.0));

  Rng rng(2);
  std::vector<double> u(1000000);
  for (double& x : u) x = uniform01(rng);
  CHECK(kolmogorov_distance(u, uniform_cdf) <= 0.002);
  CHECK(dkw_bound(1000000) == doctest::Approx(std::sqrt(std::log(2.0 / 0.05) / 2e6)));

  const std::vector<double> a{0.0, 1.0, 2.0}, b{10.0, 11.0};
  CHECK(kolmogorov_distance_two_sample(a, b) == doctest::Approx(1.0));
  CHECK(kolmogorov_distance_two_sample(a, a) == 0.0);
}

TEST_CASE("Gaussian member of the stable family") {
  const StableLaw g{2.0, {-0.5, 0.0}, 1.0};
  CHECK(stable_survival(g, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  const double z = 1.96;
  const double exact = 0.5 * std::erfc(z / std::sqrt(2.0));
  CHECK(std::abs(stable_survival(g, z) - exact) < 1e-10);
  CHECK(std::abs(stable_survival(g, z) - 0.0250) < 1e-4);
  CHECK(std::abs(stable_cdf(g, -z) - exact) < 1e-10);
  CHECK(stable_abs_moment(g, 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-8));

  const StableLaw g3{2.0, {-1.5, 0.0}, 1.0};
  const auto draws = sample_stable(g3, 1000000, 8);
  double m = 0, v = 0;
  for (double x : draws) m += x;
  m /= double(draws.size());
  for (double x : draws) v += (x - m) * (x - m);
  v /= double(draws.size() - 1);
  CHECK(v == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("asymmetric stable law of index 1.5") {
  const StableLaw law = StableLaw::from_parameters(1.5, 1.0, 1.0);
  CHECK(law.sigma() == doctest::Approx(1.0));
  CHECK(law.beta() == doctest::Approx(1.0));

  // The right tail decays like s^-q.
  const double t300 = std::pow(300.0, 1.5) * stable_survival(law, 300.0);
  const double t1000 = std::pow(1000.0, 1.5) * stable_survival(law, 1000.0);
  CHECK(t1000 > 0);
  CHECK(std::abs(t1000 / t300 - 1.0) < 0.05);

  double prev = 0;
  for (double s = -10; s <= 30; s += 0.25) {
    const double F = stable_cdf(law, s);
    CHECK(F >= prev - 1e-12);
    prev = F;
  }
  CHECK(stable_cdf(law, -1e3) < 1e-6);
  CHECK(stable_cdf(law, 1e6) > 1 - 1e-6);

  const double x = stable_quantile(law, 0.3);
  CHECK(stable_cdf(law, x) == doctest::Approx(0.3).epsilon(1e-8));

  const TabulatedCdf tab(law);
  for (double s : {tab.lo(), -1.0, 0.3, 7.0, tab.hi(), 400.0})
    CHECK(std::abs(tab(s) - stable_cdf(law, s)) < 1e-5);

  // Perfect stable samples sit at the DKW floor.
  const auto draws = sample_stable(law, 200000, 3);
  CHECK(kolmogorov_distance(draws, [&](double s) { return tab(s); }) < dkw_bound(200000));
}

TEST_CASE("growth exponent fits") {
  std::vector<double> n, pure, nlog;
  for (double x = 100; x <= 1e5 * 1.0001; x *= std::sqrt(10.0)) {
    n.push_back(x);
    pure.push_back(3 * std::pow(x, 1.5));
    nlog.push_back(x * std::log(x));
  }
  const GrowthFit a = fit_growth_exponent(n, pure);
  CHECK(a.beta == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(std::abs(a.gamma) < 1e-6);
  const GrowthFit b = fit_growth_exponent(n, nlog);
  CHECK(b.beta == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.gamma == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng(13);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> noisy;
  for (double x : n) noisy.push_back(std::pow(x, 1.2) * std::sqrt(std::log(x)) * (1 + noise(rng)));
  const GrowthFit c = fit_growth_exponent(n, noisy);
  CHECK(c.beta >= 1.15);
  CHECK(c.beta <= 1.25);
  CHECK(c.gamma >= 0.2);
  CHECK(c.gamma <= 0.8);
}

TEST_CASE("martingale inequality probes") {
  CHECK(martingale_inequality_probe(Eigen::MatrixXd::Zero(50, 8), 2.0,
                                    MartingaleForm::BurkholderRosenthal)
            .ratio == 0.0);
  // Independent symmetric signs at Q = 2: E(Σ D)^2 = k and the right side is k + k.
  Rng rng(6);
  Eigen::MatrixXd D(20000, 16);
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index k = 0; k < D.cols(); ++k) D(i, k) = (rng() & 1) ? 1.0 : -1.0;
  const MartingaleProbe p = martingale_inequality_probe(D, 2.0, MartingaleForm::BurkholderRosenthal);
  CHECK(p.ratio <= 1.0);
  CHECK(p.rhs == doctest::Approx(32.0));
  CHECK_THROWS(martingale_inequality_probe(D, 1.5, MartingaleForm::BurkholderRosenthal));
}
