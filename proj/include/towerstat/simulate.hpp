#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/observables.hpp"
#include "towerstat/tower.hpp"

namespace towerstat {

/// Defensive mixture for tall excursions: each height is drawn from
/// (1-eta) p_h + eta g(h), g log-uniform on [min_height, h_max]; the start
/// column mixes the stationary column law with g at weight eta_start.
struct ImportanceSampling {
  bool enabled = false;
  std::int64_t min_height = 1;
  double eta = 0.0;
  double eta_start = 0.0;
};

/// Mixture tuned to make excursions of height ≳ n/32 visible within n steps.
ImportanceSampling tall_excursion_sampling(const TowerModel& model, std::int64_t n);

/// Σ_{i<n} f(T^i x), x drawn from μ.
double birkhoff_sum(const TowerModel& model, const Observable& f, std::int64_t n, Rng& rng);

/// Birkhoff sum along a prescribed orbit: start point, then the heights of the
/// successive excursions entered at each return to the base.
double birkhoff_sum_scripted(const Observable& f, const TowerPoint& start,
                             std::span<const std::int64_t> heights, std::int64_t n);

/// Stationary orbit x_0, ..., x_{n-1}.
std::vector<TowerPoint> sample_orbit(const TowerModel& model, std::int64_t n, Rng& rng);

/// Runs fn(i) for i in [0, count) over `threads` workers; fn must only write
/// to slot i so results do not depend on scheduling.
template <class Fn>
void for_each_replica(std::int64_t count, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || count < 2 * threads) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

int default_threads();

struct ReplicaBatch {
  /// replicas × observables
  Eigen::MatrixXd sums;
  /// Likelihood ratios (all 1 without importance sampling).
  Eigen::VectorXd weights;
};

/// Birkhoff sums of several observables along the same stationary orbits.
ReplicaBatch simulate_birkhoff(const TowerModel& model, const std::vector<Observable>& fs,
                               std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                               std::uint64_t stream, const ImportanceSampling& is = {},
                               int threads = 1);

/// K = Σ_i w_i f(x_i) along stationary orbits.
std::vector<double> simulate_weighted_sums(const TowerModel& model, const Observable& f,
                                           const std::vector<double>& weights,
                                           std::int64_t replicas, std::uint64_t seed,
                                           std::uint64_t stream, int threads = 1);

/// S_n^Y f_Y = Σ_{j<n} f_Y(φ_j) over n consecutive excursions from the base.
std::vector<double> simulate_induced_sums(const TowerModel& model, const InducedObservable& fY,
                                          std::int64_t n, std::int64_t replicas,
                                          std::uint64_t seed, std::uint64_t stream,
                                          int threads = 1);

}  // namespace towerstat
