#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "towerstat/lemma_battery.hpp"
#include "towerstat/observables.hpp"
#include "towerstat/sequences.hpp"
#include "towerstat/truncated.hpp"

namespace towerstat {

namespace {

double gaussian(Rng& rng) {
  std::normal_distribution<double> n;
  return n(rng);
}

std::size_t index_below(std::size_t len, Rng& rng) {
  return std::min(len - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(len)));
}

double log_uniform(double lo, double hi, Rng& rng) {
  return lo * std::exp(uniform01(rng) * std::log(hi / lo));
}

double ratio_change(double a, double b) {
  if (a == b) return 0.0;
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

std::string family_name(InputFamily family) {
  switch (family) {
    case InputFamily::Gaussian: return "gaussian";
    case InputFamily::Spikes: return "spikes";
    case InputFamily::Plateaus: return "plateaus";
    case InputFamily::Signs: return "signs";
    case InputFamily::Dilations: return "dilations";
  }
  return "?";
}

std::vector<double> draw_input(InputFamily family, std::size_t len, Rng& rng) {
  if (len == 0) throw std::invalid_argument("input length must be positive");
  std::vector<double> u(len, 0.0);
  switch (family) {
    case InputFamily::Gaussian:
      for (double& x : u) x = gaussian(rng);
      break;
    case InputFamily::Spikes: {
      const int k = 1 + static_cast<int>(uniform01(rng) * 4);
      for (int j = 0; j < k; ++j)
        u[index_below(len, rng)] += (uniform01(rng) < 0.5 ? -1 : 1) * log_uniform(0.1, 10, rng);
      break;
    }
    case InputFamily::Plateaus: {
      const int k = 1 + static_cast<int>(uniform01(rng) * 3);
      for (int j = 0; j < k; ++j) {
        std::size_t a = index_below(len, rng), b = index_below(len, rng);
        if (a > b) std::swap(a, b);
        const double level = gaussian(rng);
        for (std::size_t i = a; i <= b; ++i) u[i] = level;
      }
      break;
    }
    case InputFamily::Signs: {
      // Blocks of constant sign with random block lengths.
      const double block = log_uniform(1, static_cast<double>(len), rng);
      double sign = 1;
      double left = block;
      for (double& x : u) {
        if (left <= 0) {
          sign = -sign;
          left = block;
        }
        x = sign;
        left -= 1;
      }
      break;
    }
    case InputFamily::Dilations: {
      const double w = log_uniform(1, std::max(1.0, static_cast<double>(len) / 4), rng);
      const double c = uniform01(rng) * static_cast<double>(len - 1);
      const double sign = uniform01(rng) < 0.5 ? -1 : 1;
      for (std::size_t i = 0; i < len; ++i) {
        const double z = (static_cast<double>(i) - c) / w;
        u[i] = sign * std::exp(-z * z);
      }
      break;
    }
  }
  return u;
}

SequenceLemma parse_lemma(const std::string& name) {
  if (name == "ineq-q-gt-2") return SequenceLemma::IneqQGt2;
  if (name == "ineq-q-lt-2") return SequenceLemma::IneqQLt2;
  if (name == "ineq-q-2-probe") return SequenceLemma::IneqQEq2;
  if (name == "maximal") return SequenceLemma::Maximal;
  throw std::invalid_argument("unknown lemma: " + name);
}

std::string lemma_name(SequenceLemma lemma) {
  switch (lemma) {
    case SequenceLemma::IneqQGt2: return "ineq-q-gt-2";
    case SequenceLemma::IneqQLt2: return "ineq-q-lt-2";
    case SequenceLemma::IneqQEq2: return "ineq-q-2-probe";
    case SequenceLemma::Maximal: return "maximal";
  }
  return "?";
}

BatteryReport run_sequence_battery(SequenceLemma lemma, double q, double eps,
                                   const std::vector<std::size_t>& lengths, std::size_t inputs,
                                   std::uint64_t seed) {
  if (lengths.empty() || inputs == 0) throw std::invalid_argument("empty battery");
  if (lemma == SequenceLemma::IneqQEq2) q = 2.0;
  const WeightSequence a = WeightSequence::power(q + 1);

  // Returns {ratio, ratio_hi}.
  auto evaluate = [&](std::span<const double> u) -> std::pair<double, double> {
    switch (lemma) {
      case SequenceLemma::IneqQGt2: {
        const auto r = check_ineq_q_gt_2(a, u, q);
        return {r.ratio, r.ratio_hi};
      }
      case SequenceLemma::IneqQLt2: {
        const auto r = check_ineq_q_lt_2(a, u, q, eps);
        return {r.ratio, r.ratio_hi};
      }
      case SequenceLemma::IneqQEq2: {
        const auto r = probe_ineq_q_eq_2(a, u);
        return {r.ratio, r.ratio_hi};
      }
      case SequenceLemma::Maximal: {
        const double nu = lp_norm(u, 2);
        if (nu == 0) return {0.0, 0.0};
        const double r = lp_norm(maximal_function(u, u.size()), 2) / nu;
        return {r, r};
      }
    }
    return {0.0, 0.0};
  };

  BatteryReport rep;
  rep.lemma = lemma;
  rep.q = q;
  rep.eps = eps;
  const std::size_t families = std::size(kInputFamilies);
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    const std::size_t len = lengths[li];
    BatteryLevel lvl;
    lvl.length = len;
    Rng rng(derive_seed(seed, 0xBA77, li));
    for (std::size_t k = 0; k < inputs; ++k) {
      const InputFamily fam = kInputFamilies[k % families];
      const std::vector<double> u = draw_input(fam, len, rng);
      const auto [r, rhi] = evaluate(u);
      ++lvl.inputs;
      if (rhi > lvl.max_ratio_hi) {
        lvl.max_ratio = r;
        lvl.max_ratio_hi = rhi;
        lvl.argmax_family = family_name(fam);
      }
      // Homogeneity and index-shift invariance on a subsample.
      if (k < 20 && lemma != SequenceLemma::Maximal) {
        for (double lambda : {-2.75, 1e3}) {
          std::vector<double> v(u);
          for (double& x : v) x *= lambda;
          rep.homogeneity_error = std::max(rep.homogeneity_error, ratio_change(r, evaluate(v).first));
        }
        std::vector<double> w(17, 0.0);
        w.insert(w.end(), u.begin(), u.end());
        w.resize(w.size() + 5, 0.0);
        rep.translation_error = std::max(rep.translation_error, ratio_change(r, evaluate(w).first));
      }
    }
    rep.levels.push_back(lvl);
  }
  double top = 0;
  for (const auto& l : rep.levels) top = std::max(top, l.max_ratio_hi);
  rep.growth = rep.levels.front().max_ratio_hi > 0 ? top / rep.levels.front().max_ratio_hi : 0.0;
  return rep;
}

PowerFuzzReport fuzz_stable_power(std::size_t trials, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xF022, 0));
  PowerFuzzReport rep;
  rep.worst_slack = -1.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t len = 1 + index_below(50, rng);
    std::vector<double> c(len), u(len);
    for (std::size_t i = 0; i < len; ++i) {
      c[i] = uniform01(rng) < 0.2 ? 0.0 : log_uniform(1e-3, 1e3, rng);
      u[i] = gaussian(rng) * log_uniform(1e-2, 1e2, rng);
    }
    const double p = 1.0 + 5.0 * uniform01(rng);
    const PowerCheck r = stable_power_check(c, u, p);
    ++rep.trials;
    if (!r.holds) ++rep.violations;
    if (r.rhs > 0) rep.worst_slack = std::max(rep.worst_slack, (r.lhs - r.rhs) / r.rhs);
  }
  return rep;
}

FkRatioReport run_fk_ratio(double q, int h_max, int k_lo, int k_window, int k_max) {
  if (!(k_lo >= 0 && k_window > 0 && k_max >= k_lo + k_window - 1))
    throw std::invalid_argument("bad k window");
  const TowerModel model(TailLaw::power(q, 1.0, h_max));
  const TruncatedTower tower(model);
  const Observable f0 = appendix_observable(model);
  const Observable f = f0.scaled(1.0 / f0.sup_norm());
  FkRatioReport rep;
  rep.q = q;
  rep.h_max = h_max;
  rep.k_lo = k_lo;
  rep.k_window = k_window;
  rep.k_max = k_max;
  rep.ratio = lemma_Fk_ratio(tower, f, k_max);
  for (int k = k_lo; k <= k_max; ++k) {
    if (k < k_lo + k_window) rep.window_max = std::max(rep.window_max, rep.ratio[k]);
    rep.overall_max = std::max(rep.overall_max, rep.ratio[k]);
  }
  return rep;
}

}  // namespace towerstat
