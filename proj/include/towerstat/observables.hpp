#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "towerstat/tower.hpp"

namespace towerstat {

/// f(h, i) = v(i) + (h ≥ threshold ? tall : short) - offset on column h, level i.
/// Centered so that Σ f μ = 0 over the model it was built for.
class Observable {
 public:
  Observable() = default;

  double value(std::int64_t height, std::int64_t level) const {
    return profile(level) + (height >= threshold_ ? tall_ : short_) - offset_;
  }
  double value(const TowerPoint& x) const { return value(x.height, x.level); }
  /// Σ_{from ≤ i < to} f(h, i).
  double column_sum(std::int64_t height, std::int64_t from, std::int64_t to) const {
    const double cls = (height >= threshold_ ? tall_ : short_) - offset_;
    return profile_sum(from, to) + cls * static_cast<double>(to - from);
  }
  /// f_Y for a branch of this height.
  double excursion_sum(std::int64_t height) const { return column_sum(height, 0, height); }

  double mean_offset() const { return offset_; }
  double sup_norm() const { return sup_; }
  /// sup f - inf f; the Lipschitz constant when distinct cells sit at distance 1.
  double oscillation() const { return osc_; }
  /// sup|f| plus the Lipschitz part, which vanishes inside partition elements.
  double lip_norm() const { return sup_; }
  /// Σ f μ after centering (should be ~0).
  double centered_mean() const { return residual_mean_; }
  bool is_zero() const { return zero_; }
  const std::string& name() const { return name_; }
  std::int64_t threshold() const { return threshold_; }

  static Observable zero(const TowerModel& model);
  /// Constant profile; centering turns it into 0.
  static Observable constant(const TowerModel& model, double c);
  /// inside on columns h ≥ threshold, outside elsewhere, then centered.
  static Observable height_indicator(const TowerModel& model, std::int64_t threshold,
                                     double inside, double outside);
  static Observable level_profile(const TowerModel& model,
                                  const std::function<double(std::int64_t)>& v,
                                  std::string name);

  Observable scaled(double factor) const;

 private:
  double profile(std::int64_t level) const {
    return levels_ ? (*levels_)[static_cast<std::size_t>(level)] : 0.0;
  }
  double profile_sum(std::int64_t from, std::int64_t to) const {
    if (!prefix_) return 0.0;
    return (*prefix_)[static_cast<std::size_t>(to)] - (*prefix_)[static_cast<std::size_t>(from)];
  }
  void center(const TowerModel& model);

  std::shared_ptr<const std::vector<double>> levels_, prefix_;
  std::int64_t threshold_ = 1;
  double tall_ = 0, short_ = 0, offset_ = 0;
  double sup_ = 0, osc_ = 0, residual_mean_ = 0;
  bool zero_ = true;
  std::string name_ = "zero";
};

/// f = 1 - 1_Y/μ(Y); its induced function is φ - 1/μ(Y).
Observable appendix_observable(const TowerModel& model);
/// 1 on columns of height ≥ n, a constant elsewhere, mean zero.
Observable tail_indicator_observable(const TowerModel& model, std::int64_t n);
/// v(i) = limit (1 - 1/(i+1)), centered.
Observable stable_class_observable(const TowerModel& model, double limit = 1.0);

/// Branch sums f_Y(h) = Σ_{j<h} f(h, j), indexed by h-1.
struct InducedObservable {
  std::vector<double> values;

  double operator()(std::int64_t height) const {
    return values[static_cast<std::size_t>(height - 1)];
  }
  std::int64_t h_max() const { return static_cast<std::int64_t>(values.size()); }
};

InducedObservable induce(const TowerModel& model, const Observable& f);
/// Σ_h f_Y(h) μ_Y(φ = h).
double induced_mean(const TowerModel& model, const InducedObservable& fY);

/// K(x_0, ..., x_{m-1}) with per-coordinate Lipschitz constants.
class SeparatelyLipschitzFunctional {
 public:
  using Evaluator = std::function<double(std::span<const TowerPoint>)>;
  enum class Kind { Birkhoff, WeightedSum, SoftMax, Custom };

  SeparatelyLipschitzFunctional(std::size_t window, Evaluator eval, std::vector<double> lip,
                                Kind kind = Kind::Custom);
  /// Linear functional K = Σ w_i f(x_i); Lip_i = |w_i| osc(f).
  SeparatelyLipschitzFunctional(const Observable& f, std::vector<double> weights,
                                Kind kind = Kind::WeightedSum);

  double operator()(std::span<const TowerPoint> xs) const { return eval_(xs); }
  std::size_t window() const { return window_; }
  const std::vector<double>& lip_profile() const { return lip_; }
  Kind kind() const { return kind_; }

  /// Coefficients w_i for Birkhoff and weighted sums (K = Σ w_i f(x_i)).
  const std::vector<double>& weights() const { return weights_; }
  const Observable& observable() const { return f_; }

  SeparatelyLipschitzFunctional scaled(double lambda) const;

 private:
  std::size_t window_;
  Evaluator eval_;
  std::vector<double> lip_;
  Kind kind_;
  std::vector<double> weights_;
  Observable f_;
};

struct BirkhoffSpec {
  Observable f;
  std::size_t n = 1;
};
struct WeightedSumSpec {
  Observable f;
  std::vector<double> weights;
};
/// smoothing · log Σ_j exp(A_j / smoothing), A_j the average of f over
/// coordinates [j, j + block).
struct SoftMaxSpec {
  Observable f;
  std::size_t window = 1;
  std::size_t block = 1;
  double smoothing = 1.0;
};
using FunctionalSpec = std::variant<BirkhoffSpec, WeightedSumSpec, SoftMaxSpec>;

SeparatelyLipschitzFunctional make_functional(const FunctionalSpec& spec);

}  // namespace towerstat
