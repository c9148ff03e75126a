#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "towerstat/simulate.hpp"

namespace towerstat {

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

ImportanceSampling tall_excursion_sampling(const TowerModel& model, std::int64_t n) {
  ImportanceSampling is;
  const std::int64_t m = std::max<std::int64_t>(2, n / 32);
  if (m >= model.h_max()) return is;
  is.enabled = true;
  is.min_height = m;
  is.eta = std::min(0.5, 1.0 / (static_cast<double>(n) * model.mu_Y() + 1.0));
  is.eta_start = 0.25;
  return is;
}

namespace {

// Draws excursion heights and start points, tracking the likelihood ratio.
class HeightSource {
 public:
  HeightSource(const TowerModel& model, const ImportanceSampling& is)
      : model_(model), law_(model.tail()), is_(is) {
    if (is_.enabled) {
      if (is_.min_height < 1 || is_.min_height > law_.h_max())
        throw std::invalid_argument("importance sampling threshold outside [1, h_max]");
      if (!(is_.eta >= 0 && is_.eta < 1 && is_.eta_start >= 0 && is_.eta_start < 1))
        throw std::invalid_argument("importance sampling weights must lie in [0,1)");
      log_span_ = std::log(static_cast<double>(law_.h_max() + 1) /
                           static_cast<double>(is_.min_height));
    }
  }

  double proposal_pmf(std::int64_t h) const {
    if (h < is_.min_height) return 0.0;
    return std::log1p(1.0 / static_cast<double>(h)) / log_span_;
  }

  std::int64_t draw_proposal(double u) const {
    auto h = static_cast<std::int64_t>(static_cast<double>(is_.min_height) *
                                       std::exp(u * log_span_));
    return std::clamp<std::int64_t>(h, is_.min_height, law_.h_max());
  }

  // Height of the next excursion; multiplies `weight` by p/q.
  std::int64_t next(Rng& rng, double& weight) const {
    if (!is_.enabled) return law_.sample(rng);
    const double u = uniform01(rng);
    std::int64_t h;
    if (u < is_.eta)
      h = draw_proposal(u / is_.eta);
    else
      h = law_.invert(std::max((u - is_.eta) / (1.0 - is_.eta), 0x1.0p-60));
    const double p = law_.pmf(h);
    weight *= p / ((1.0 - is_.eta) * p + is_.eta * proposal_pmf(h));
    return h;
  }

  TowerPoint start(Rng& rng, double& weight) const {
    TowerPoint x;
    if (!is_.enabled) {
      x = model_.sample_stationary(rng);
      return x;
    }
    x = model_.sample_stationary(rng);
    const double u = uniform01(rng);
    if (u < is_.eta_start) {
      x.height = draw_proposal(u / is_.eta_start);
      x.level = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(x.height));
      if (x.level >= x.height) x.level = x.height - 1;
    }
    const double p0 = model_.mu_Y() * static_cast<double>(x.height) * law_.pmf(x.height);
    weight *= p0 / ((1.0 - is_.eta_start) * p0 + is_.eta_start * proposal_pmf(x.height));
    return x;
  }

 private:
  const TowerModel& model_;
  const TailLaw& law_;
  ImportanceSampling is_;
  double log_span_ = 1.0;
};

}  // namespace

double birkhoff_sum(const TowerModel& model, const Observable& f, std::int64_t n, Rng& rng) {
  if (n <= 0) return 0.0;
  TowerPoint x = model.sample_stationary(rng);
  double s = 0;
  std::int64_t left = n;
  for (;;) {
    const std::int64_t steps = std::min(x.height - x.level, left);
    s += f.column_sum(x.height, x.level, x.level + steps);
    left -= steps;
    if (left == 0) break;
    x.state = model.sample_next_state(x.state, x.height, rng);
    x.height = model.sample_return_time(rng);
    x.level = 0;
  }
  return s;
}

double birkhoff_sum_scripted(const Observable& f, const TowerPoint& start,
                             std::span<const std::int64_t> heights, std::int64_t n) {
  double s = 0;
  std::int64_t left = n;
  TowerPoint x = start;
  std::size_t next = 0;
  while (left > 0) {
    const std::int64_t steps = std::min(x.height - x.level, left);
    s += f.column_sum(x.height, x.level, x.level + steps);
    left -= steps;
    if (left == 0) break;
    if (next >= heights.size()) throw std::invalid_argument("scripted orbit too short");
    x.height = heights[next++];
    x.level = 0;
  }
  return s;
}

std::vector<TowerPoint> sample_orbit(const TowerModel& model, std::int64_t n, Rng& rng) {
  std::vector<TowerPoint> xs;
  if (n <= 0) return xs;
  xs.reserve(static_cast<std::size_t>(n));
  xs.push_back(model.sample_stationary(rng));
  for (std::int64_t i = 1; i < n; ++i) xs.push_back(model.iterate(xs.back(), rng));
  return xs;
}

ReplicaBatch simulate_birkhoff(const TowerModel& model, const std::vector<Observable>& fs,
                               std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                               std::uint64_t stream, const ImportanceSampling& is,
                               int threads) {
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  const HeightSource src(model, is);
  const auto k = static_cast<Eigen::Index>(fs.size());
  ReplicaBatch out;
  out.sums = Eigen::MatrixXd::Zero(replicas, k);
  out.weights = Eigen::VectorXd::Ones(replicas);
  for_each_replica(replicas, threads, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, stream, static_cast<std::uint64_t>(r)));
    double w = 1.0;
    if (n <= 0) return;
    TowerPoint x = src.start(rng, w);
    std::int64_t left = n;
    double acc[16];
    std::vector<double> big;
    double* s = acc;
    if (k > 16) {
      big.assign(static_cast<std::size_t>(k), 0.0);
      s = big.data();
    } else {
      std::fill(acc, acc + 16, 0.0);
    }
    for (;;) {
      const std::int64_t steps = std::min(x.height - x.level, left);
      for (Eigen::Index j = 0; j < k; ++j)
        s[j] += fs[j].column_sum(x.height, x.level, x.level + steps);
      left -= steps;
      if (left == 0) break;
      x.state = model.sample_next_state(x.state, x.height, rng);
      x.height = src.next(rng, w);
      x.level = 0;
    }
    for (Eigen::Index j = 0; j < k; ++j) out.sums(r, j) = s[j];
    out.weights(r) = w;
  });
  return out;
}

std::vector<double> simulate_weighted_sums(const TowerModel& model, const Observable& f,
                                           const std::vector<double>& weights,
                                           std::int64_t replicas, std::uint64_t seed,
                                           std::uint64_t stream, int threads) {
  std::vector<double> out(static_cast<std::size_t>(replicas), 0.0);
  const auto m = static_cast<std::int64_t>(weights.size());
  for_each_replica(replicas, threads, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, stream, static_cast<std::uint64_t>(r)));
    if (m == 0) return;
    TowerPoint x = model.sample_stationary(rng);
    double s = 0;
    std::int64_t i = 0;
    for (;;) {
      const std::int64_t steps = std::min(x.height - x.level, m - i);
      for (std::int64_t t = 0; t < steps; ++t)
        s += weights[static_cast<std::size_t>(i + t)] * f.value(x.height, x.level + t);
      i += steps;
      if (i == m) break;
      x.state = model.sample_next_state(x.state, x.height, rng);
      x.height = model.sample_return_time(rng);
      x.level = 0;
    }
    out[static_cast<std::size_t>(r)] = s;
  });
  return out;
}

std::vector<double> simulate_induced_sums(const TowerModel& model, const InducedObservable& fY,
                                          std::int64_t n, std::int64_t replicas,
                                          std::uint64_t seed, std::uint64_t stream,
                                          int threads) {
  if (fY.h_max() < model.h_max())
    throw std::invalid_argument("induced observable shorter than the tower");
  std::vector<double> out(static_cast<std::size_t>(replicas), 0.0);
  const TailLaw& law = model.tail();
  for_each_replica(replicas, threads, [&](std::int64_t r) {
    Rng rng(derive_seed(seed, stream, static_cast<std::uint64_t>(r)));
    double s = 0;
    for (std::int64_t j = 0; j < n; ++j) s += fY(law.sample(rng));
    out[static_cast<std::size_t>(r)] = s;
  });
  return out;
}

}  // namespace towerstat
