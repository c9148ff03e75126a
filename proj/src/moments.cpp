#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "towerstat/moments.hpp"
#include "towerstat/rng.hpp"
#include "towerstat/sequences.hpp"

namespace towerstat {

namespace {

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

void check_weights(std::span<const double> x, std::span<const double> w) {
  if (!w.empty() && w.size() != x.size())
    throw std::invalid_argument("weights and samples differ in length");
}

}  // namespace

MomentEstimate strong_moment(std::span<const double> samples, double p,
                             std::span<const double> weights, int bootstrap,
                             std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("strong_moment needs samples");
  if (!(p > 0)) throw std::invalid_argument("moment order must be positive");
  check_weights(samples, weights);
  const std::size_t N = samples.size();
  std::vector<double> contrib(N);
  long double total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    contrib[i] = weight_at(weights, i) * abs_pow(samples[i], p);
    total += contrib[i];
  }
  MomentEstimate out;
  out.estimate = static_cast<double>(total / N);

  if (bootstrap > 1 && N > 1) {
    Rng rng(derive_seed(seed, 0xB007, 0));
    long double s1 = 0, s2 = 0;
    for (int b = 0; b < bootstrap; ++b) {
      long double acc = 0;
      for (std::size_t i = 0; i < N; ++i)
        acc += contrib[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(N))];
      const long double m = acc / N;
      s1 += m;
      s2 += m * m;
    }
    const long double mean = s1 / bootstrap;
    const long double var = (s2 / bootstrap - mean * mean) * bootstrap / (bootstrap - 1);
    out.stderr_ = std::sqrt(std::max(0.0, static_cast<double>(var)));
  }

  if (total > 0) {
    const std::size_t top = std::max<std::size_t>(1, (N + 999) / 1000);
    std::vector<double> sorted = contrib;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top - 1),
                     sorted.end(), std::greater<>());
    long double top_sum = 0;
    for (std::size_t i = 0; i < top; ++i) top_sum += sorted[i];
    out.tail_dominated = top_sum > 0.5L * total;
  }
  return out;
}

double weak_moment(std::span<const double> samples, double p, std::span<const double> weights) {
  check_weights(samples, weights);
  const std::size_t N = samples.size();
  if (N == 0) return 0.0;
  std::vector<std::pair<double, double>> xs(N);
  for (std::size_t i = 0; i < N; ++i) xs[i] = {std::fabs(samples[i]), weight_at(weights, i)};
  std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // Levels exceeded by fewer than √N samples are skipped: there s^p P(|X| > s)
  // is carried by a handful of order statistics and is itself heavy-tailed.
  const auto k_min = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(N))));
  double best = 0;
  long double W = 0;
  for (std::size_t i = 0; i < N;) {
    const double v = xs[i].first;
    while (i < N && xs[i].first == v) W += xs[i++].second;
    if (v > 0 && i >= k_min) best = std::max(best, abs_pow(v, p) * static_cast<double>(W / N));
  }
  return best;
}

std::vector<double> empirical_tail(std::span<const double> samples, std::span<const double> s,
                                   std::span<const double> weights) {
  check_weights(samples, weights);
  const std::size_t N = samples.size();
  std::vector<std::pair<double, double>> xs(N);
  for (std::size_t i = 0; i < N; ++i) xs[i] = {std::fabs(samples[i]), weight_at(weights, i)};
  std::sort(xs.begin(), xs.end());
  // suffix[i] = Σ_{j ≥ i} w_j
  std::vector<long double> suffix(N + 1, 0);
  for (std::size_t i = N; i-- > 0;) suffix[i] = suffix[i + 1] + xs[i].second;
  std::vector<double> out;
  out.reserve(s.size());
  for (double si : s) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), si,
                                     [](double v, const auto& e) { return v < e.first; });
    const auto k = static_cast<std::size_t>(it - xs.begin());
    out.push_back(N ? static_cast<double>(suffix[k] / N) : 0.0);
  }
  return out;
}

double kolmogorov_distance(std::span<const double> samples,
                           const std::function<double(double)>& cdf) {
  const std::size_t N = samples.size();
  if (N == 0) return 0.0;
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  double d = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double F = cdf(xs[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N));
  }
  return d;
}

double kolmogorov_distance_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() || j < y.size()) {
    const double v = i == x.size() ? y[j] : j == y.size() ? x[i] : std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return d;
}

double dkw_bound(std::size_t n, double alpha) {
  if (n == 0) return 1.0;
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

MartingaleProbe martingale_inequality_probe(const Eigen::MatrixXd& D, double Q, MartingaleForm form,
                                            std::span<const double> cond2,
                                            std::span<const double> condQ) {
  if (form == MartingaleForm::BurkholderRosenthal && !(Q >= 2))
    throw std::invalid_argument("Burkholder-Rosenthal form needs Q >= 2");
  if (form == MartingaleForm::VonBahrEsseen && !(Q > 1 && Q < 2))
    throw std::invalid_argument("von Bahr-Esseen form needs 1 < Q < 2");
  const auto R = D.rows(), K = D.cols();
  MartingaleProbe out;
  out.form = form;
  if (R == 0 || K == 0) return out;
  const Eigen::VectorXd sums = D.rowwise().sum();

  if (form == MartingaleForm::BurkholderRosenthal) {
    if (!cond2.empty() && static_cast<Eigen::Index>(cond2.size()) != K)
      throw std::invalid_argument("conditional variance terms do not match D");
    if (!condQ.empty() && static_cast<Eigen::Index>(condQ.size()) != K)
      throw std::invalid_argument("conditional moment terms do not match D");
    long double lhs = 0;
    for (Eigen::Index r = 0; r < R; ++r) lhs += abs_pow(sums(r), Q);
    out.lhs = static_cast<double>(lhs / R);
    long double a = 0, b = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!cond2.empty()) {
        a += cond2[k];
      } else {
        a += D.col(k).squaredNorm() / static_cast<double>(R);
      }
      if (!condQ.empty()) {
        b += condQ[k];
      } else {
        long double m = 0;
        for (Eigen::Index r = 0; r < R; ++r) m += abs_pow(D(r, k), Q);
        b += m / R;
      }
    }
    out.rhs = std::pow(static_cast<double>(a), Q / 2.0) + static_cast<double>(b);
  } else {
    std::vector<double> col(static_cast<std::size_t>(R));
    out.lhs = weak_moment(std::span<const double>(sums.data(), static_cast<std::size_t>(R)), Q);
    long double rhs = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index r = 0; r < R; ++r) col[r] = D(r, k);
      rhs += weak_moment(col, Q);
    }
    out.rhs = static_cast<double>(rhs);
  }
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
  return out;
}

}  // namespace towerstat
