#include <doctest.h>

#include <cmath>

#include "towerstat/observables.hpp"
#include "towerstat/simulate.hpp"
#include "towerstat/tower.hpp"

using namespace towerstat;

namespace {

// Σ f μ summed column by column from the level masses.
double tower_mean(const TowerModel& model, const Observable& f) {
  double s = 0;
  for (std::int64_t h = 1; h <= model.h_max(); ++h)
    s += model.level_mass(0, h) * f.column_sum(h, 0, h);
  return s;
}

}  // namespace

TEST_CASE("tail indicator") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 2000));
  CHECK(tail_indicator_observable(model, 1).is_zero());
  CHECK(tail_indicator_observable(model, 5000).is_zero());

  // Masses (0.9, 0.1) on heights {1, 5}: E phi = 1.4 and the tall column has measure 5/14.
  const TowerModel two = build_tower(TailLaw::from_pmf({0.9, 0, 0, 0, 0.1}));
  const Observable f = tail_indicator_observable(two, 5);
  for (int i = 0; i < 5; ++i) CHECK(f.value(5, i) == doctest::Approx(1.0));
  CHECK(f.value(1, 0) == doctest::Approx(-5.0 / 9.0));
  CHECK(std::abs(tower_mean(two, f)) < 1e-12);

  // On a column of height >= 2n, S_n f = n from any level below h/2.
  const std::int64_t n = 50;
  const Observable g = tail_indicator_observable(model, n);
  for (std::int64_t level : {0, 30, 99}) {
    const std::int64_t heights[] = {1};
    CHECK(birkhoff_sum_scripted(g, TowerPoint{0, 200, level}, heights, n) ==
          doctest::Approx(double(n)));
  }
}

TEST_CASE("centering is exact for every construction") {
  const TowerModel model = build_tower(TailLaw::power(2.5, 1.0, 5000));
  const Observable fs[] = {appendix_observable(model), tail_indicator_observable(model, 40),
                           stable_class_observable(model, 1.0),
                           stable_class_observable(model, -3.0), Observable::constant(model, 2.0)};
  for (const auto& f : fs) {
    CHECK(std::abs(tower_mean(model, f)) < 1e-10);
    CHECK(std::abs(f.centered_mean()) < 1e-10);
  }
}

TEST_CASE("stable-class observable tends to limit minus mean") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 100000));
  const Observable f = stable_class_observable(model, 1.0);
  CHECK(f.value(100000, 99999) == doctest::Approx(1.0 - 1e-5 - f.mean_offset()).epsilon(1e-12));
  // The appendix observable is the constant 1 above the base.
  const Observable a = appendix_observable(model);
  CHECK(a.value(1000, 7) == doctest::Approx(1.0));
  CHECK(a.value(1000, 0) == doctest::Approx(1.0 - 1.0 / model.mu_Y()));
}

TEST_CASE("induced observable") {
  const TowerModel two = build_tower(TailLaw::from_pmf({0.5, 0.5}));
  const InducedObservable zero = induce(two, Observable::zero(two));
  for (double v : zero.values) CHECK(v == 0.0);
  const InducedObservable fY = induce(two, appendix_observable(two));
  CHECK(fY(1) == doctest::Approx(-0.5));
  CHECK(fY(2) == doctest::Approx(0.5));

  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 50000));
  const InducedObservable gY = induce(model, appendix_observable(model));
  for (std::int64_t h : {1, 7, 50000})
    CHECK(gY(h) == doctest::Approx(double(h) - 1.0 / model.mu_Y()).epsilon(1e-12));
  CHECK(std::abs(induced_mean(model, gY)) < 1e-10);
}

TEST_CASE("functionals and their Lipschitz profiles") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 300));
  const Observable f = tail_indicator_observable(model, 20);
  Rng rng(7);

  const auto birk = make_functional(BirkhoffSpec{f, 64});
  const auto orbit = sample_orbit(model, 64, rng);
  double s = 0;
  for (const auto& x : orbit) s += f.value(x);
  CHECK(birk(orbit) == doctest::Approx(s).epsilon(1e-12));
  for (double l : birk.lip_profile()) CHECK(l == doctest::Approx(f.oscillation()));

  std::vector<double> first(16, 0.0);
  first[0] = 1.0;
  const auto k0 = make_functional(WeightedSumSpec{f, first});
  for (std::size_t i = 1; i < 16; ++i) CHECK(k0.lip_profile()[i] == 0.0);

  CHECK_THROWS(make_functional(BirkhoffSpec{f, 0}));

  // Single-coordinate swaps on the (height, level) alphabet, diameter 1.
  std::vector<double> w(32);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(i + 1.0, -0.6);
  const SeparatelyLipschitzFunctional Ks[] = {
      make_functional(WeightedSumSpec{f, w}), make_functional(BirkhoffSpec{f, 32}),
      make_functional(SoftMaxSpec{f, 32, 4, 0.5})};
  for (const auto& K : Ks) {
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      auto xs = sample_orbit(model, static_cast<std::int64_t>(K.window()), rng);
      const std::size_t i = rng() % K.window();
      const double before = K(xs);
      const std::int64_t h = 1 + static_cast<std::int64_t>(rng() % 300);
      xs[i] = TowerPoint{0, h, static_cast<std::int64_t>(rng() % h)};
      const double change = std::abs(K(xs) - before);
      const double bound = K.lip_profile()[i];
      worst = std::max(worst, change - bound);
    }
    CHECK(worst <= 1e-12);
  }
}
