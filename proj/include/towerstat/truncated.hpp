#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/observables.hpp"
#include "towerstat/renewal.hpp"
#include "towerstat/tower.hpp"

namespace towerstat {

/// Every (state, height, level) cell of a tower with a small h_max, with the
/// transfer operator applied matrix-free.
class TruncatedTower {
 public:
  explicit TruncatedTower(const TowerModel& model);

  const TowerModel& model() const { return *model_; }
  int size() const { return n_cells_; }
  int states() const { return S_; }
  int h_max() const { return H_; }

  int index(int state, int height, int level) const {
    return offset_[state * H_ + (height - 1)] + level;
  }
  TowerPoint point(int cell) const;
  bool is_base(int cell) const { return level_[cell] == 0; }
  bool is_top(int cell) const { return level_[cell] + 1 == height_[cell]; }
  int level(int cell) const { return level_[cell]; }
  int height(int cell) const { return height_[cell]; }
  int state(int cell) const { return state_[cell]; }

  const std::vector<int>& base_cells() const { return base_; }
  const std::vector<int>& top_cells() const { return top_; }
  /// μ of each cell.
  const Eigen::VectorXd& mass() const { return mass_; }

  /// g for the piece of the top of (state, height) landing in `target_state`.
  double jacobian(int state, int height, int target_state) const {
    return g_[(state * H_ + (height - 1)) * S_ + target_state];
  }
  /// g for the transition top cell -> base cell (0 if not a top/base pair).
  double jacobian(int top_cell, int base_cell) const {
    if (!is_top(top_cell) || !is_base(base_cell)) return 0.0;
    return jacobian(state_[top_cell], height_[top_cell], state_[base_cell]);
  }
  /// Cells of positive measure.
  bool charged(int cell) const { return mass_(cell) > 0; }

  /// (L u)(y) = Σ_{Tx = y} g(x) u(x).
  Eigen::VectorXd apply_transfer(const Eigen::VectorXd& u) const;
  /// (L a)(y) = Σ_{Tx = y} g(x) a(x -> y) for a function of transitions.
  Eigen::VectorXd apply_transfer_edges(const std::function<double(int, int)>& a) const;
  /// Cells x with Tx = y and their weights g.
  std::vector<std::pair<int, double>> preimages(int cell) const;

  Eigen::VectorXd values(const Observable& f) const;

  int sample_stationary(Rng& rng) const;
  int step(int cell, Rng& rng) const;

 private:
  const TowerModel* model_;
  int S_, H_, n_cells_;
  std::vector<int> offset_, state_, height_, level_, base_, top_;
  std::vector<double> g_;
  Eigen::VectorXd mass_;
  std::vector<double> cum_mass_;
};

/// B_0 (restriction to base cells) and B_b for b ≥ 1: (B_b u)(s') = Σ_{h > b} g u(s, h, h - b).
struct EntryOperators {
  std::vector<Eigen::MatrixXd> B;  // B[0]: base cells × cells; B[b]: states × cells
  std::vector<double> norm_B;      // ‖B_b‖ for b ≥ 1
  std::vector<double> norm_ratio;  // ‖B_b‖ / μ_Y(φ > b)
  /// max over n ≤ N and test functions of |1_{Δ0} L^n u - Σ T_ℓ B_b u|.
  double max_residual = 0;
  std::vector<double> residual_by_n;
};

/// Renewal operators on base-cell functions: T_0 = I, T_n = lift(Σ_k T^state_{n-k} R^cell_k).
std::vector<Eigen::MatrixXd> cell_renewal_operators(const TruncatedTower& tower,
                                                    const std::vector<Eigen::MatrixXd>& T_state,
                                                    int N);

EntryOperators entry_operators(const TruncatedTower& tower, const Observable& f, int N,
                               int random_tests = 4, std::uint64_t seed = 1);

struct MartingaleData {
  int n = 0;
  Eigen::VectorXd f;
  /// F_k = Σ_{i ≤ k} L^i f, k = 0..n.
  std::vector<Eigen::VectorXd> F;
  /// Sampled D_k = A_k ∘ T^k (replicas × n), filled by sample_increments.
  Eigen::MatrixXd D;

  Eigen::VectorXd G(int k) const { return F[k] - f; }
  /// A_k(x -> y) = F_k(x) - G_{k+1}(y).
  double A(int k, int from, int to) const { return F[k](from) - (F[k + 1](to) - f(to)); }
};

MartingaleData martingale_decomposition(const TruncatedTower& tower, const Observable& f, int n);
/// L(A_k) on all cells; identically zero in exact arithmetic.
Eigen::VectorXd transfer_of_increment(const TruncatedTower& tower, const MartingaleData& m, int k);
/// sup_y L(|A_k|^r)(y) = ‖E(|D_k|^r | F_{k+1})‖_∞.
double conditional_moment_sup(const TruncatedTower& tower, const MartingaleData& m, int k,
                              double r);

struct ReconstructionCheck {
  double max_residual = 0;
  int orbits = 0;
};
/// Samples orbits, fills m.D and checks S_n f = Σ_k A_k(T^k x) + G_n(T^n x).
ReconstructionCheck sample_increments(const TruncatedTower& tower, MartingaleData& m,
                                      int orbits, std::uint64_t seed);

/// ratio[k] = max over top cells x and landing cells y of
/// |F_k(x) - F_{k+1}(y)| / (1 + min(level(x), k)), k = 0..k_max.
std::vector<double> lemma_Fk_ratio(const TruncatedTower& tower, const Observable& f, int k_max);

struct ConcentrationData {
  int k_max = 0;
  int reference_cell = -1;
  std::vector<int> orbit;
  /// K_k(x_k, ...) by direct conditional expectation, k = 0..k_max.
  std::vector<double> direct;
  /// Same through Σ_i T_{k-i} w_i(x_k) + K(x_*, ..., x_*, x_k, ...) (NaN off the base).
  std::vector<double> reconstructed;
  double max_residual = 0;
  /// sup_x |w_i(x)| and Σ_{a+b=i} Lip_a μ_Y(φ > b), taken at the largest checked k.
  std::vector<double> w_norm, w_bound;
  /// |K_k - K_{k+1}| divided by the height-dependent bound, k < k_max.
  std::vector<double> increment_ratio;
  /// Maximal function of the Lip profile.
  std::vector<double> maximal;
};

/// `orbit` is a cell path of length ≥ k_max + window; reference_cell < 0 picks
/// the base cell of largest mass.
ConcentrationData concentration_decomposition(const TruncatedTower& tower,
                                              const SeparatelyLipschitzFunctional& K, int k_max,
                                              std::span<const int> orbit,
                                              int reference_cell = -1);

std::vector<int> sample_cell_orbit(const TruncatedTower& tower, int length, Rng& rng);

}  // namespace towerstat
