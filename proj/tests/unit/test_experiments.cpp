#include <doctest.h>

#include <cmath>

#include "towerstat/experiments.hpp"
#include "towerstat/moments.hpp"
#include "towerstat/simulate.hpp"

using namespace towerstat;

namespace {

struct Entry {
  double q, p, beta, gamma;
};

// Growth n^β (log n)^γ of the worst-case p-th moment, entered by hand.
const Entry kTable[] = {
    // q = 1.5, p* = 1.5
    {1.5, 1.0, 1.0 / 1.5, 0.0},
    {1.5, 1.5, 1.0, 1.0},
    {1.5, 2.0, 1.5, 0.0},
    {1.5, 3.5, 3.0, 0.0},
    // q = 2, p* = 2
    {2.0, 1.0, 0.5, 0.5},
    {2.0, 2.0, 1.0, 1.0},
    {2.0, 4.0, 3.0, 0.0},
    // q = 3, p* = 4
    {3.0, 1.0, 0.5, 0.0},
    {3.0, 2.0, 1.0, 0.0},
    {3.0, 4.0, 2.0, 0.0},
    {3.0, 6.0, 4.0, 0.0},
};

ExperimentConfig small_config(double q) {
  ExperimentConfig cfg;
  cfg.model.q = q;
  cfg.model.h_max = 100000;
  cfg.n_grid = {100, 300, 1000};
  cfg.windows = {50, 200};
  cfg.replicas = 2000;
  cfg.out_dir = "unused";
  return cfg;
}

}  // namespace

TEST_CASE("predicted exponent table") {
  CHECK(phase_transition(1.5) == 1.5);
  CHECK(phase_transition(2.0) == 2.0);
  CHECK(phase_transition(3.0) == 4.0);
  for (const Entry& e : kTable) {
    CAPTURE(e.q);
    CAPTURE(e.p);
    const PredictedExponent pe = predicted_exponents(e.q, e.p);
    CHECK(pe.beta == doctest::Approx(e.beta).epsilon(1e-14));
    CHECK(pe.gamma == doctest::Approx(e.gamma).epsilon(1e-14));
    CHECK_FALSE(pe.regime.empty());
  }
  CHECK_THROWS(predicted_exponents(0.9, 1.0));
}

TEST_CASE("normalisation") {
  CHECK(normalisation(3.0, 10000) == doctest::Approx(100.0));
  CHECK(normalisation(2.0, 10000) == doctest::Approx(std::sqrt(10000 * std::log(10000.0))));
  CHECK(normalisation(1.5, 1000000) == doctest::Approx(10000.0));
}

TEST_CASE("lower-bound mass") {
  const TowerModel model = build_tower(TailLaw::power(3.0, 1.0, 2000));
  for (std::int64_t n : {1, 10, 250, 1000}) {
    double mass = 0;
    for (std::int64_t h = 2 * n; h <= model.h_max(); ++h)
      for (std::int64_t i = 0; 2 * i < h; ++i) mass += model.level_mass(0, h);
    CHECK(lower_bound_mass(model, n) == doctest::Approx(mass).epsilon(1e-12));
  }
  CHECK(lower_bound_mass(model, 1001) == 0.0);
}

TEST_CASE("concentration bound factors") {
  std::vector<double> lip(500);
  for (std::size_t i = 0; i < lip.size(); ++i) lip[i] = std::pow(i + 1.0, -0.6);
  double s1 = 0, s2 = 0;
  for (double l : lip) {
    s1 += l;
    s2 += l * l;
  }
  CHECK(concentration_log_factor(lip, 2) ==
        doctest::Approx(1 + std::log(s1) - 0.5 * std::log(s2)).epsilon(1e-14));
  for (double lambda : {1e-3, 0.5, 10.0, 1e4}) {
    std::vector<double> scaled(lip);
    for (double& l : scaled) l *= lambda;
    CHECK(std::abs(concentration_log_factor(scaled, 2) - concentration_log_factor(lip, 2)) < 1e-10);
    CHECK(concentration_rhs(3.0, 2.0, scaled) ==
          doctest::Approx(lambda * lambda * concentration_rhs(3.0, 2.0, lip)).epsilon(1e-12));
  }
  CHECK(concentration_rhs(3.0, 2.0, lip) == doctest::Approx(s2).epsilon(1e-12));
  CHECK(concentration_rhs(2.0, 2.0, lip) ==
        doctest::Approx(s2 * concentration_log_factor(lip, 2)).epsilon(1e-12));
}

TEST_CASE("degenerate experiments") {
  ExperimentConfig weak = small_config(1.5);
  weak.observable.kind = ObservableKind::Zero;
  const ExperimentReport w = run_weak_moment_check(weak);
  for (const auto& v : w.results["ratio"]) CHECK(v.get<double>() == 0.0);

  ExperimentConfig conc = small_config(2.0);
  conc.functional.kind = FunctionalKind::Constant;
  const ExperimentReport c = run_concentration(conc);
  CHECK(c.passed());
  for (const auto& row : c.rows) CHECK(row.estimate == 0.0);

  ExperimentConfig conv = small_config(1.5);
  conv.p_grid = {1.5};
  CHECK_THROWS_AS(run_moment_convergence(conv), std::invalid_argument);
  CHECK_THROWS_AS(run_weak_moment_check(small_config(2.5)), std::invalid_argument);
}

TEST_CASE("Birkhoff functional agrees with moment scaling") {
  // K = Σ_{i<n} f(x_i) is S_n f; the two estimates use independent streams.
  const TowerModel model = build_tower(TailLaw::power(3.0, 1.0, 100000));
  const Observable f = appendix_observable(model);
  const std::int64_t n = 200, R = 20000;
  const std::vector<double> k = simulate_weighted_sums(model, f, std::vector<double>(n, 1.0), R, 1, 7);
  const ReplicaBatch b = simulate_birkhoff(model, {f}, n, R, 1, 8);
  const std::vector<double> s(b.sums.col(0).data(), b.sums.col(0).data() + R);
  const MomentEstimate mk = strong_moment(k, 2.0), ms = strong_moment(s, 2.0);
  CHECK(std::abs(mk.estimate - ms.estimate) <=
        3.0 * std::hypot(mk.stderr_, ms.stderr_));
}

TEST_CASE("lower-bound probe flags bounds past the truncation") {
  ExperimentConfig cfg = small_config(3.0);
  cfg.model.h_max = 1500;
  cfg.observable.kind = ObservableKind::TailIndicator;
  cfg.p_grid = {6.0};
  const ExperimentReport r = run_lower_bound_probe(cfg);
  const auto& flags = r.results["truncated"];
  CHECK(flags.size() == 3);
  CHECK_FALSE(flags[0].get<bool>());
  CHECK(flags[2].get<bool>());
}
