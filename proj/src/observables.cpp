#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "towerstat/observables.hpp"

namespace towerstat {

void Observable::center(const TowerModel& model) {
  const auto H = model.h_max();
  const TailLaw& law = model.tail();
  auto mean_with = [&](double off) {
    long double acc = 0;
    for (std::int64_t h = 1; h <= H; ++h) {
      const double p = law.pmf(h);
      if (p == 0) continue;
      const double cls = (h >= threshold_ ? tall_ : short_) - off;
      acc += static_cast<long double>(p) * (profile_sum(0, h) + cls * static_cast<double>(h));
    }
    return static_cast<double>(acc * model.mu_Y());
  };
  offset_ = mean_with(0.0);
  residual_mean_ = mean_with(offset_);

  // Bounds over the cells that can occur.
  const bool has_tall = threshold_ <= H;
  const bool has_short = threshold_ > 1;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < H; ++i) {
    const double v = profile(i) - offset_;
    if (has_tall) {
      hi = std::max(hi, v + tall_);
      lo = std::min(lo, v + tall_);
    }
    if (has_short && i + 1 < threshold_) {
      hi = std::max(hi, v + short_);
      lo = std::min(lo, v + short_);
    }
    if (!levels_ && i > 0) break;  // constant in the level
  }
  sup_ = std::max(std::fabs(hi), std::fabs(lo));
  osc_ = hi - lo;
  zero_ = sup_ < 1e-300;
}

Observable Observable::zero(const TowerModel& model) {
  Observable f;
  f.center(model);
  f.name_ = "zero";
  return f;
}

Observable Observable::constant(const TowerModel& model, double c) {
  Observable f;
  f.tall_ = c;
  f.short_ = c;
  f.center(model);
  f.name_ = "constant";
  return f;
}

Observable Observable::height_indicator(const TowerModel& model, std::int64_t threshold,
                                        double inside, double outside) {
  if (threshold < 1) throw std::invalid_argument("height threshold must be at least 1");
  Observable f;
  f.threshold_ = threshold;
  f.tall_ = inside;
  f.short_ = outside;
  f.center(model);
  f.name_ = "height_indicator";
  return f;
}

Observable Observable::level_profile(const TowerModel& model,
                                     const std::function<double(std::int64_t)>& v,
                                     std::string name) {
  const auto H = model.h_max();
  auto lv = std::make_shared<std::vector<double>>(static_cast<std::size_t>(H));
  auto pre = std::make_shared<std::vector<double>>(static_cast<std::size_t>(H) + 1, 0.0);
  long double acc = 0;
  for (std::int64_t i = 0; i < H; ++i) {
    const double x = v(i);
    (*lv)[i] = x;
    acc += x;
    (*pre)[i + 1] = static_cast<double>(acc);
  }
  Observable f;
  f.levels_ = lv;
  f.prefix_ = pre;
  f.center(model);
  f.name_ = std::move(name);
  return f;
}

Observable Observable::scaled(double factor) const {
  Observable g = *this;
  if (levels_) {
    auto lv = std::make_shared<std::vector<double>>(*levels_);
    auto pre = std::make_shared<std::vector<double>>(*prefix_);
    for (auto& x : *lv) x *= factor;
    for (auto& x : *pre) x *= factor;
    g.levels_ = lv;
    g.prefix_ = pre;
  }
  g.tall_ *= factor;
  g.short_ *= factor;
  g.offset_ *= factor;
  g.residual_mean_ *= factor;
  g.sup_ *= std::fabs(factor);
  g.osc_ *= std::fabs(factor);
  g.zero_ = g.sup_ < 1e-300;
  return g;
}

Observable appendix_observable(const TowerModel& model) {
  const double first = 1.0 - 1.0 / model.mu_Y();
  return Observable::level_profile(
      model, [first](std::int64_t i) { return i == 0 ? first : 1.0; }, "appendix");
}

Observable tail_indicator_observable(const TowerModel& model, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("tail indicator needs n >= 1");
  if (n > model.h_max()) {
    Observable f = Observable::zero(model);
    return f;
  }
  const double m = model.column_survival()[static_cast<std::size_t>(n - 1)];
  const double outside = m >= 1.0 ? 0.0 : -m / (1.0 - m);
  Observable f = Observable::height_indicator(model, n, 1.0, outside);
  return f;
}

Observable stable_class_observable(const TowerModel& model, double limit) {
  if (limit == 0.0) throw std::invalid_argument("stable-class limit must be nonzero");
  return Observable::level_profile(
      model,
      [limit](std::int64_t i) { return limit * (1.0 - 1.0 / static_cast<double>(i + 1)); },
      "stable_class");
}

InducedObservable induce(const TowerModel& model, const Observable& f) {
  InducedObservable fY;
  const auto H = model.h_max();
  fY.values.resize(static_cast<std::size_t>(H));
  for (std::int64_t h = 1; h <= H; ++h) fY.values[h - 1] = f.excursion_sum(h);
  return fY;
}

double induced_mean(const TowerModel& model, const InducedObservable& fY) {
  long double acc = 0;
  for (std::int64_t h = 1; h <= fY.h_max(); ++h)
    acc += static_cast<long double>(model.tail().pmf(h)) * fY(h);
  return static_cast<double>(acc);
}

SeparatelyLipschitzFunctional::SeparatelyLipschitzFunctional(std::size_t window,
                                                             Evaluator eval,
                                                             std::vector<double> lip, Kind kind)
    : window_(window), eval_(std::move(eval)), lip_(std::move(lip)), kind_(kind) {
  if (window_ == 0) throw std::invalid_argument("functional window must be nonempty");
  if (lip_.size() != window_) throw std::invalid_argument("lip profile length != window");
  for (double l : lip_)
    if (!(l >= 0.0)) throw std::invalid_argument("lip profile must be nonnegative");
}

SeparatelyLipschitzFunctional::SeparatelyLipschitzFunctional(const Observable& f,
                                                             std::vector<double> weights,
                                                             Kind kind)
    : window_(weights.size()), kind_(kind), weights_(std::move(weights)), f_(f) {
  if (window_ == 0) throw std::invalid_argument("functional window must be nonempty");
  lip_.resize(window_);
  for (std::size_t i = 0; i < window_; ++i) lip_[i] = std::fabs(weights_[i]) * f.oscillation();
  auto w = weights_;
  eval_ = [w, f](std::span<const TowerPoint> xs) {
    if (xs.size() < w.size()) throw std::invalid_argument("orbit shorter than window");
    double acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] != 0.0) acc += w[i] * f.value(xs[i]);
    return acc;
  };
}

SeparatelyLipschitzFunctional SeparatelyLipschitzFunctional::scaled(double lambda) const {
  if (!weights_.empty()) {
    auto w = weights_;
    for (auto& x : w) x *= lambda;
    return SeparatelyLipschitzFunctional(f_, std::move(w), kind_);
  }
  auto inner = eval_;
  auto lip = lip_;
  for (auto& l : lip) l *= std::fabs(lambda);
  return SeparatelyLipschitzFunctional(
      window_, [inner, lambda](std::span<const TowerPoint> xs) { return lambda * inner(xs); },
      std::move(lip), kind_);
}

namespace {

SeparatelyLipschitzFunctional build(const BirkhoffSpec& s) {
  if (s.n == 0) throw std::invalid_argument("functional window must be nonempty");
  return SeparatelyLipschitzFunctional(s.f, std::vector<double>(s.n, 1.0),
                                       SeparatelyLipschitzFunctional::Kind::Birkhoff);
}

SeparatelyLipschitzFunctional build(const WeightedSumSpec& s) {
  return SeparatelyLipschitzFunctional(s.f, s.weights,
                                       SeparatelyLipschitzFunctional::Kind::WeightedSum);
}

SeparatelyLipschitzFunctional build(const SoftMaxSpec& s) {
  if (s.window == 0 || s.block == 0 || s.block > s.window)
    throw std::invalid_argument("soft max needs 0 < block <= window");
  if (!(s.smoothing > 0)) throw std::invalid_argument("soft max smoothing must be positive");
  const std::size_t m = s.window, b = s.block;
  const double tau = s.smoothing;
  const Observable f = s.f;
  std::vector<double> lip(m, f.oscillation() / static_cast<double>(b));
  auto eval = [m, b, tau, f](std::span<const TowerPoint> xs) {
    if (xs.size() < m) throw std::invalid_argument("orbit shorter than window");
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i) vals[i] = f.value(xs[i]);
    std::vector<double> avg(m - b + 1);
    double run = 0;
    for (std::size_t i = 0; i < b; ++i) run += vals[i];
    for (std::size_t j = 0; j + b <= m; ++j) {
      if (j > 0) run += vals[j + b - 1] - vals[j - 1];
      avg[j] = run / static_cast<double>(b);
    }
    const double top = *std::max_element(avg.begin(), avg.end());
    double acc = 0;
    for (double a : avg) acc += std::exp((a - top) / tau);
    return top + tau * std::log(acc);
  };
  return SeparatelyLipschitzFunctional(m, eval, std::move(lip),
                                       SeparatelyLipschitzFunctional::Kind::SoftMax);
}

}  // namespace

SeparatelyLipschitzFunctional make_functional(const FunctionalSpec& spec) {
  return std::visit([](const auto& s) { return build(s); }, spec);
}

}  // namespace towerstat
