#include <doctest.h>

#include <cmath>
#include <functional>

#include "towerstat/observables.hpp"
#include "towerstat/renewal.hpp"
#include "towerstat/truncated.hpp"

using namespace towerstat;

namespace {

// Σ over compositions l_1 + ... + l_k = n of R_{l_1} ... R_{l_k}.
Eigen::MatrixXd composition_sum(const std::vector<Eigen::MatrixXd>& R, int n) {
  const auto S = R[0].rows();
  if (n == 0) return Eigen::MatrixXd::Identity(S, S);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(S, S);
  std::function<void(int, const Eigen::MatrixXd&)> rec = [&](int left, const Eigen::MatrixXd& acc) {
    if (left == 0) {
      total += acc;
      return;
    }
    for (int l = 1; l <= left; ++l) rec(left - l, acc * R[l]);
  };
  rec(n, Eigen::MatrixXd::Identity(S, S));
  return total;
}

Eigen::MatrixXd P1() { return (Eigen::MatrixXd(2, 2) << 0.3, 0.7, 0.6, 0.4).finished(); }
Eigen::MatrixXd P2() { return (Eigen::MatrixXd(2, 2) << 0.9, 0.1, 0.2, 0.8).finished(); }

// Heights {1, 2} with equal mass; landing rows depend on the height.
TowerModel two_state_model() {
  return build_tower(TailLaw::from_pmf({0.5, 0.5}), 2, [](int s, std::int64_t h) {
    Eigen::VectorXd row = (h == 1 ? P1() : P2()).row(s).transpose();
    return row;
  });
}

}  // namespace

TEST_CASE("first-return operators") {
  const TowerModel scalar = build_tower(TailLaw::from_pmf({0.5, 0.5}));
  const auto R = first_return_operators(scalar, 4);
  CHECK(R[0](0, 0) == 0.0);
  CHECK(R[1](0, 0) == doctest::Approx(0.5));
  CHECK(R[2](0, 0) == doctest::Approx(0.5));
  CHECK(R[3](0, 0) == 0.0);

  // Induced kernel 0.5 P1 + 0.5 P2 is doubly stochastic, so π = (1/2, 1/2) and
  // R_h[s', s] = π_s p_h P_h(s, s') / π_s' = 0.5 P_h(s, s').
  const TowerModel model = two_state_model();
  CHECK(model.base_distribution()(0) == doctest::Approx(0.5));
  const auto Rs = first_return_operators(model, 3);
  CHECK((Rs[1] - 0.5 * P1().transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((Rs[2] - 0.5 * P2().transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(Rs[3].cwiseAbs().maxCoeff() == 0.0);
  // Row sums of Σ R_h are 1.
  CHECK(((Rs[1] + Rs[2]).rowwise().sum() - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("renewal sequence by hand and by composition enumeration") {
  const TowerModel scalar = build_tower(TailLaw::from_pmf({0.5, 0.5}));
  const auto T = renewal_sequence(first_return_operators(scalar, 40), 40);
  CHECK(T[0](0, 0) == 1.0);
  CHECK(T[1](0, 0) == doctest::Approx(0.5));
  CHECK(T[2](0, 0) == doctest::Approx(0.75));
  CHECK(T[3](0, 0) == doctest::Approx(0.625));
  CHECK(T[40](0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

  const TowerModel unit = build_tower(TailLaw::from_pmf({1.0}));
  for (const auto& Tn : renewal_sequence(first_return_operators(unit, 10), 10))
    CHECK(Tn(0, 0) == 1.0);

  const TowerModel models[] = {two_state_model(), build_tower(TailLaw::power(1.5, 1.0, 9)),
                               build_tower(TailLaw::power(2.0, 1.0, 12), 3, [](int s, std::int64_t h) {
                                 Eigen::VectorXd row(3);
                                 row << 1.0 + s, 1.0 + double(h % 3), 2.0;
                                 return Eigen::VectorXd(row / row.sum());
                               })};
  for (const auto& m : models) {
    const int N = 12;
    const auto R = first_return_operators(m, N);
    const auto Tm = renewal_sequence(R, N);
    for (int n = 0; n <= N; ++n)
      CHECK((Tm[n] - composition_sum(R, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("renewal decay") {
  const TowerModel model = build_tower(TailLaw::power(2.5, 1.0, 100000));
  const RenewalData d = compute_renewal(model, 5000);
  const DecayReport rep = renewal_decay_report(d.T, d.Pi, 2.5);
  CHECK(rep.slope_increment >= -3.0);
  CHECK(rep.slope_increment <= -2.0);
  CHECK_FALSE(rep.superpolynomial);
  for (double v : d.norm_deviation) CHECK(v == 0.0);

  std::vector<double> r(10001);
  for (std::int64_t n = 1; n <= 10000; ++n) r[n] = model.tail().pmf(n);
  const auto u = scalar_renewal_sequence(r, 10000);
  CHECK(std::abs(u[10000] - model.mu_Y()) < 1e-3);

  // Geometric tail behind an atom at h = 1.
  std::vector<double> pmf(80);
  pmf[0] = 0.2;
  for (int h = 2; h <= 80; ++h) pmf[h - 1] = 0.8 * std::ldexp(1.0, 1 - h);
  pmf.back() *= 2;  // lump the remainder
  const TowerModel geo = build_tower(TailLaw::from_pmf(pmf));
  const RenewalData g = compute_renewal(geo, 200);
  CHECK(renewal_decay_report(g.T, g.Pi, 2.0).superpolynomial);
}

TEST_CASE("entry operators reproduce 1_base L^n") {
  const TowerModel model = build_tower(TailLaw::from_pmf({0.5, 0.0, 0.5}));
  const TruncatedTower tower(model);
  const Observable f = appendix_observable(model);
  const EntryOperators e = entry_operators(tower, f, 2);
  CHECK(e.residual_by_n.at(0) < 1e-12);
  CHECK(e.max_residual < 1e-12);

  const TowerModel multi = two_state_model();
  const TruncatedTower t2(multi);
  CHECK(entry_operators(t2, appendix_observable(multi), 30).max_residual < 1e-10);
}

TEST_CASE("martingale decomposition") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 40));
  const TruncatedTower tower(model);
  const MartingaleData zero = martingale_decomposition(tower, Observable::zero(model), 20);
  for (const auto& Fk : zero.F) CHECK(Fk.cwiseAbs().maxCoeff() == 0.0);

  const Observable f = appendix_observable(model);
  MartingaleData m = martingale_decomposition(tower, f, 50);
  for (int k : {0, 1, 10, 49}) CHECK(transfer_of_increment(tower, m, k).cwiseAbs().maxCoeff() < 1e-10);
  const ReconstructionCheck rc = sample_increments(tower, m, 200, 3);
  CHECK(rc.orbits == 200);
  CHECK(rc.max_residual < 1e-9);
}

TEST_CASE("F_k ratio") {
  const TowerModel model = build_tower(TailLaw::power(1.5, 1.0, 30));
  const TruncatedTower tower(model);
  for (double r : lemma_Fk_ratio(tower, Observable::zero(model), 40)) CHECK(r == 0.0);

  // Single column of height 1: F_k = f for all k, so only the k = 0 term can be nonzero.
  const TowerModel unit = build_tower(TailLaw::from_pmf({1.0}));
  const TruncatedTower t1(unit);
  const auto ratio = lemma_Fk_ratio(t1, Observable::zero(unit), 5);
  for (double r : ratio) CHECK(r == 0.0);
}

TEST_CASE("concentration decomposition") {
  // Direct conditional expectations enumerate backward paths, so keep k small.
  const TowerModel model = build_tower(TailLaw::power(2.5, 1.0, 8));
  const TruncatedTower tower(model);
  Rng rng(9);
  const auto orbit = sample_cell_orbit(tower, 40, rng);

  const SeparatelyLipschitzFunctional constant(
      6, [](std::span<const TowerPoint>) { return 3.0; }, std::vector<double>(6, 0.0));
  const ConcentrationData c = concentration_decomposition(tower, constant, 12, orbit);
  for (double v : c.direct) CHECK(v == doctest::Approx(3.0));
  for (double w : c.w_norm) CHECK(w == doctest::Approx(0.0));

  std::vector<double> w(6);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(i + 1.0, -0.6);
  const auto K = make_functional(WeightedSumSpec{appendix_observable(model), w});
  const ConcentrationData d = concentration_decomposition(tower, K, 12, orbit);
  CHECK(d.max_residual < 1e-9);
  for (std::size_t i = 0; i < d.w_norm.size(); ++i) CHECK(d.w_norm[i] <= d.w_bound[i] + 1e-12);
}
