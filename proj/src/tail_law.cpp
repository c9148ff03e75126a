#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "towerstat/tower.hpp"

namespace towerstat {

std::int64_t invert_survival(const std::vector<double>& surv, double u) {
  // surv[n-1] = P(X >= n); surv.front() == 1 and surv.back() == 0.
  const std::int64_t last = static_cast<std::int64_t>(surv.size()) - 1;
  std::int64_t h = 1;
  constexpr std::int64_t kScan = 24;
  while (h < kScan && h < last && surv[h] >= u) ++h;
  if (h < kScan || h >= last || surv[h] < u) return h;
  // Largest n with surv[n-1] >= u lies in [h+1, last].
  std::int64_t lo = h + 1, hi = last;
  while (lo < hi) {
    std::int64_t mid = lo + (hi - lo + 1) / 2;
    if (surv[mid - 1] >= u)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

TailLaw TailLaw::power(double q, double C, std::int64_t h_max, double epsilon,
                       double C2) {
  if (!(q > 1.0))
    throw std::invalid_argument("tail index must satisfy q>1 (got " +
                                std::to_string(q) + ")");
  if (!(C > 0.0)) throw std::invalid_argument("tail constant C must be positive");
  if (h_max < 1) throw std::invalid_argument("h_max must be at least 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (!(C2 >= 0.0)) throw std::invalid_argument("correction constant must be nonnegative");

  TailLaw law;
  law.q_ = q;
  law.C_ = C;
  law.epsilon_ = epsilon;
  law.C2_ = C2;
  law.h_max_ = h_max;
  law.power_ = true;

  const auto n_tab = static_cast<std::size_t>(h_max) + 1;
  std::vector<long double> tau(n_tab, 0.0L);
  tau[0] = 1.0L;
  std::int64_t crossover = 1;
  bool crossed = false;
  for (std::int64_t n = 2; n <= h_max; ++n) {
    long double ln = std::log(static_cast<long double>(n));
    long double v = C * std::exp(-q * ln);
    if (C2 > 0) v += C2 * std::exp(-(q + epsilon) * ln);
    if (!crossed && v <= 1.0L) {
      crossover = n;
      crossed = true;
    }
    tau[static_cast<std::size_t>(n - 1)] = std::min(1.0L, v);
  }
  if (!crossed) crossover = h_max + 1;
  law.crossover_ = crossover;

  auto t = std::make_shared<std::vector<double>>(n_tab);
  auto p = std::make_shared<std::vector<double>>(static_cast<std::size_t>(h_max));
  for (std::size_t i = 0; i < n_tab; ++i) (*t)[i] = static_cast<double>(tau[i]);
  for (std::int64_t h = 1; h < h_max; ++h)
    (*p)[h - 1] = static_cast<double>(tau[h - 1] - tau[h]);
  (*p)[h_max - 1] = static_cast<double>(tau[h_max - 1]);
  law.tau_ = t;
  law.pmf_ = p;
  law.finish();
  return law;
}

TailLaw TailLaw::from_pmf(std::vector<double> pmf, double q) {
  if (pmf.empty()) throw std::invalid_argument("empty return-time law");
  long double total = 0;
  for (double v : pmf) {
    if (!(v >= 0.0)) throw std::invalid_argument("negative return-time probability");
    total += v;
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > 1e-12)
    throw std::invalid_argument("return-time probabilities must sum to 1");

  TailLaw law;
  law.q_ = q;
  law.h_max_ = static_cast<std::int64_t>(pmf.size());
  law.power_ = false;
  const std::size_t H = pmf.size();
  auto t = std::make_shared<std::vector<double>>(H + 1, 0.0);
  long double acc = 0;
  for (std::size_t i = H; i-- > 0;) {
    acc += pmf[i];
    (*t)[i] = static_cast<double>(acc);
  }
  (*t)[0] = 1.0;
  law.tau_ = t;
  law.pmf_ = std::make_shared<std::vector<double>>(std::move(pmf));
  law.crossover_ = 1;
  law.finish();
  return law;
}

void TailLaw::finish() {
  long double m = 0;
  for (std::int64_t n = 1; n <= h_max_; ++n) m += (*tau_)[n - 1];
  mean_ = static_cast<double>(m);

  correction_ = 0;
  realized_ = 0;
  if (std::isfinite(q_)) {
    for (std::int64_t n = std::max<std::int64_t>(crossover_, 1); n < h_max_; ++n) {
      const double dn = static_cast<double>(n);
      realized_ = std::max(realized_, std::pow(dn, q_) * (*tau_)[n - 1]);
      if (power_) {
        double dev = std::fabs((*tau_)[n - 1] - C_ * std::pow(dn, -q_));
        correction_ = std::max(correction_, dev * std::pow(dn, q_ + epsilon_));
      }
    }
  }
}

std::int64_t TailLaw::invert(double u) const { return invert_survival(*tau_, u); }

}  // namespace towerstat
