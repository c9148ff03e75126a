#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "towerstat/rng.hpp"

namespace towerstat {

enum class InputFamily { Gaussian, Spikes, Plateaus, Signs, Dilations };

inline constexpr InputFamily kInputFamilies[] = {InputFamily::Gaussian, InputFamily::Spikes,
                                                 InputFamily::Plateaus, InputFamily::Signs,
                                                 InputFamily::Dilations};

std::string family_name(InputFamily family);
/// Random test sequence of length `len` from the given family.
std::vector<double> draw_input(InputFamily family, std::size_t len, Rng& rng);

enum class SequenceLemma {
  IneqQGt2,    // windowed power sums against (Σ u²)^{q-1}, q > 2
  IneqQLt2,    // smoothed power sums against Σ |u|^q, q < 2
  IneqQEq2,    // the q > 2 form at q = 2 (exploratory)
  Maximal,     // ‖Mu‖₂ / ‖u‖₂
};

/// Parses ineq-q-gt-2, ineq-q-lt-2, ineq-q-2-probe, maximal.
SequenceLemma parse_lemma(const std::string& name);
std::string lemma_name(SequenceLemma lemma);

struct BatteryLevel {
  std::size_t length = 0;
  std::size_t inputs = 0;
  double max_ratio = 0;
  /// Upper end of the enclosure of the largest ratio.
  double max_ratio_hi = 0;
  std::string argmax_family;
};

struct BatteryReport {
  SequenceLemma lemma = SequenceLemma::IneqQGt2;
  double q = 0, eps = 0;
  std::vector<BatteryLevel> levels;
  /// Largest max_ratio_hi on the ladder over the one at the first length.
  double growth = 0;
  /// Relative ratio change under u -> λu and under index shifts.
  double homogeneity_error = 0, translation_error = 0;
};

/// Ratio battery over `inputs` draws per length, split evenly across families.
/// Weights are a_h = (h+1)^-(q+1) for the inequality lemmas.
BatteryReport run_sequence_battery(SequenceLemma lemma, double q, double eps,
                                   const std::vector<std::size_t>& lengths, std::size_t inputs,
                                   std::uint64_t seed);

struct PowerFuzzReport {
  std::size_t trials = 0, violations = 0;
  double worst_slack = 0;  // max (lhs - rhs) / rhs
};
/// Random (c, u, p) triples for |Σ c u|^p ≤ (Σ c)^{p-1} Σ c |u|^p.
PowerFuzzReport fuzz_stable_power(std::size_t trials, std::uint64_t seed);

struct FkRatioReport {
  double q = 0;
  int h_max = 0, k_lo = 0, k_window = 0, k_max = 0;
  std::vector<double> ratio;
  /// Max over [k_lo, k_lo + k_window) and over [k_lo, k_max].
  double window_max = 0, overall_max = 0;
};
/// Bound |F_k(x) - F_{k+1}(y)| ≤ C(1 + min(level, k)) for f = appendix
/// observable normalised to sup norm 1 on a truncated tower.
FkRatioReport run_fk_ratio(double q, int h_max, int k_lo, int k_window, int k_max);

}  // namespace towerstat
