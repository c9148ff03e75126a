#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "towerstat/sequences.hpp"
#include "towerstat/truncated.hpp"

namespace towerstat {

TruncatedTower::TruncatedTower(const TowerModel& model) : model_(&model) {
  S_ = model.base_states();
  if (model.h_max() > 20000) throw std::invalid_argument("truncated tower needs h_max <= 20000");
  H_ = static_cast<int>(model.h_max());
  const double cells = static_cast<double>(S_) * H_ * (H_ + 1) / 2.0;
  if (cells > 3e7) throw std::invalid_argument("truncated tower too large");
  n_cells_ = static_cast<int>(cells);

  offset_.resize(static_cast<std::size_t>(S_) * H_);
  state_.resize(n_cells_);
  height_.resize(n_cells_);
  level_.resize(n_cells_);
  mass_.resize(n_cells_);
  const Eigen::VectorXd& pi = model.base_distribution();
  int c = 0;
  for (int s = 0; s < S_; ++s)
    for (int h = 1; h <= H_; ++h) {
      offset_[s * H_ + (h - 1)] = c;
      const double m = model.level_mass(s, h);
      for (int i = 0; i < h; ++i, ++c) {
        state_[c] = s;
        height_[c] = h;
        level_[c] = i;
        mass_(c) = m;
      }
      base_.push_back(offset_[s * H_ + (h - 1)]);
      top_.push_back(offset_[s * H_ + (h - 1)] + h - 1);
    }

  g_.assign(static_cast<std::size_t>(S_) * H_ * S_, 0.0);
  for (int s = 0; s < S_; ++s)
    for (int h = 1; h <= H_; ++h) {
      const double p = model.tail().pmf(h);
      if (p == 0) continue;
      const Eigen::VectorXd row = model.transition_row(s, h);
      for (int t = 0; t < S_; ++t)
        g_[(s * H_ + (h - 1)) * S_ + t] = pi(s) * p * row(t) / pi(t);
    }

  cum_mass_.resize(n_cells_);
  long double acc = 0;
  for (int i = 0; i < n_cells_; ++i) {
    acc += mass_(i);
    cum_mass_[i] = static_cast<double>(acc);
  }
}

TowerPoint TruncatedTower::point(int cell) const {
  return {state_[cell], height_[cell], level_[cell]};
}

Eigen::VectorXd TruncatedTower::apply_transfer(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v(n_cells_);
  std::vector<double> inflow(S_, 0.0);
  for (int s = 0; s < S_; ++s)
    for (int h = 1; h <= H_; ++h) {
      const double ut = u(offset_[s * H_ + (h - 1)] + h - 1);
      const double* g = &g_[(s * H_ + (h - 1)) * S_];
      for (int t = 0; t < S_; ++t) inflow[t] += g[t] * ut;
    }
  for (int s = 0; s < S_; ++s)
    for (int h = 1; h <= H_; ++h) {
      const int o = offset_[s * H_ + (h - 1)];
      v(o) = inflow[s];
      for (int i = 1; i < h; ++i) v(o + i) = u(o + i - 1);
    }
  return v;
}

Eigen::VectorXd TruncatedTower::apply_transfer_edges(
    const std::function<double(int, int)>& a) const {
  Eigen::VectorXd v(n_cells_);
  for (int c = 0; c < n_cells_; ++c) {
    if (level_[c] > 0) {
      v(c) = a(c - 1, c);
      continue;
    }
    const int t = state_[c];
    double acc = 0;
    for (int s = 0; s < S_; ++s)
      for (int h = 1; h <= H_; ++h) {
        const double g = g_[(s * H_ + (h - 1)) * S_ + t];
        if (g != 0) acc += g * a(offset_[s * H_ + (h - 1)] + h - 1, c);
      }
    v(c) = acc;
  }
  return v;
}

std::vector<std::pair<int, double>> TruncatedTower::preimages(int cell) const {
  std::vector<std::pair<int, double>> out;
  if (level_[cell] > 0) {
    out.emplace_back(cell - 1, 1.0);
    return out;
  }
  const int t = state_[cell];
  for (int s = 0; s < S_; ++s)
    for (int h = 1; h <= H_; ++h) {
      const double g = g_[(s * H_ + (h - 1)) * S_ + t];
      if (g > 0) out.emplace_back(offset_[s * H_ + (h - 1)] + h - 1, g);
    }
  return out;
}

Eigen::VectorXd TruncatedTower::values(const Observable& f) const {
  Eigen::VectorXd v(n_cells_);
  for (int c = 0; c < n_cells_; ++c) v(c) = f.value(height_[c], level_[c]);
  return v;
}

int TruncatedTower::sample_stationary(Rng& rng) const {
  const double u = uniform01(rng) * cum_mass_.back();
  auto it = std::upper_bound(cum_mass_.begin(), cum_mass_.end(), u);
  int c = static_cast<int>(it - cum_mass_.begin());
  if (c >= n_cells_) c = n_cells_ - 1;
  while (mass_(c) == 0 && c > 0) --c;
  return c;
}

int TruncatedTower::step(int cell, Rng& rng) const {
  if (!is_top(cell)) return cell + 1;
  const int s = model_->sample_next_state(state_[cell], height_[cell], rng);
  const auto h = static_cast<int>(model_->sample_return_time(rng));
  return index(s, h, 0);
}

std::vector<int> sample_cell_orbit(const TruncatedTower& tower, int length, Rng& rng) {
  std::vector<int> xs;
  if (length <= 0) return xs;
  xs.reserve(length);
  xs.push_back(tower.sample_stationary(rng));
  for (int i = 1; i < length; ++i) xs.push_back(tower.step(xs.back(), rng));
  return xs;
}

std::vector<Eigen::MatrixXd> cell_renewal_operators(const TruncatedTower& tower,
                                                    const std::vector<Eigen::MatrixXd>& T_state,
                                                    int N) {
  const int S = tower.states();
  const auto& base = tower.base_cells();
  const int nb = static_cast<int>(base.size());
  if (static_cast<int>(T_state.size()) <= N - 1 && N > 0)
    throw std::invalid_argument("state renewal sequence too short");
  // R^cell_k: states × base cells.
  std::vector<Eigen::MatrixXd> Rc(static_cast<std::size_t>(N) + 1, Eigen::MatrixXd::Zero(S, nb));
  for (int b = 0; b < nb; ++b) {
    const int c = base[b];
    const int h = tower.height(c);
    if (h > N) continue;
    for (int t = 0; t < S; ++t) Rc[h](t, b) = tower.jacobian(tower.state(c), h, t);
  }
  Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(nb, S);
  for (int b = 0; b < nb; ++b) lift(b, tower.state(base[b])) = 1.0;

  std::vector<Eigen::MatrixXd> Tc;
  Tc.reserve(static_cast<std::size_t>(N) + 1);
  Tc.push_back(Eigen::MatrixXd::Identity(nb, nb));
  for (int n = 1; n <= N; ++n) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(S, nb);
    for (int k = 1; k <= n; ++k) acc.noalias() += T_state[n - k] * Rc[k];
    Tc.push_back(lift * acc);
  }
  return Tc;
}

EntryOperators entry_operators(const TruncatedTower& tower, const Observable& f, int N,
                               int random_tests, std::uint64_t seed) {
  if (N < 0) throw std::invalid_argument("N must be nonnegative");
  const int S = tower.states();
  const int nc = tower.size();
  const auto& base = tower.base_cells();
  const int nb = static_cast<int>(base.size());
  const TowerModel& model = tower.model();

  EntryOperators out;
  out.B.reserve(static_cast<std::size_t>(N) + 1);
  Eigen::MatrixXd B0 = Eigen::MatrixXd::Zero(nb, nc);
  for (int b = 0; b < nb; ++b) B0(b, base[b]) = 1.0;
  out.B.push_back(B0);
  out.norm_B.push_back(1.0);
  out.norm_ratio.push_back(1.0);
  for (int b = 1; b <= N; ++b) {
    Eigen::MatrixXd Bb = Eigen::MatrixXd::Zero(S, nc);
    for (int s = 0; s < S; ++s)
      for (int h = b + 1; h <= tower.h_max(); ++h) {
        const int c = tower.index(s, h, h - b);
        for (int t = 0; t < S; ++t) Bb(t, c) += tower.jacobian(s, h, t);
      }
    const double nrm = operator_norm(Bb);
    out.norm_B.push_back(nrm);
    const double tail = model.tail().survival(b + 1);
    out.norm_ratio.push_back(tail > 0 ? nrm / tail : (nrm == 0 ? 0.0 : INFINITY));
    out.B.push_back(std::move(Bb));
  }

  const RenewalData rd = compute_renewal(model, N);
  const auto Tc = cell_renewal_operators(tower, rd.T, N);
  Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(nb, S);
  for (int b = 0; b < nb; ++b) lift(b, tower.state(base[b])) = 1.0;

  std::vector<Eigen::VectorXd> tests{tower.values(f)};
  Rng rng(derive_seed(seed, 0xB0B0, 0));
  for (int r = 0; r < random_tests; ++r) {
    Eigen::VectorXd u(nc);
    for (int c = 0; c < nc; ++c) u(c) = 2.0 * uniform01(rng) - 1.0;
    tests.push_back(std::move(u));
  }

  out.residual_by_n.assign(static_cast<std::size_t>(N) + 1, 0.0);
  for (const auto& u : tests) {
    std::vector<Eigen::VectorXd> Bu(static_cast<std::size_t>(N) + 1);
    for (int b = 1; b <= N; ++b) Bu[b] = out.B[b] * u;
    const Eigen::VectorXd ubase = B0 * u;
    Eigen::VectorXd Lnu = u;
    for (int n = 0; n <= N; ++n) {
      if (n > 0) Lnu = tower.apply_transfer(Lnu);
      Eigen::VectorXd rhs = Tc[n] * ubase;
      for (int b = 1; b <= n; ++b) rhs += lift * (rd.T[n - b] * Bu[b]);
      double res = 0;
      for (int b = 0; b < nb; ++b)
        if (tower.charged(base[b])) res = std::max(res, std::fabs(Lnu(base[b]) - rhs(b)));
      out.residual_by_n[n] = std::max(out.residual_by_n[n], res);
      out.max_residual = std::max(out.max_residual, res);
    }
  }
  return out;
}

MartingaleData martingale_decomposition(const TruncatedTower& tower, const Observable& f, int n) {
  if (n < 1) throw std::invalid_argument("martingale decomposition needs n >= 1");
  MartingaleData m;
  m.n = n;
  m.f = tower.values(f);
  const double mean = m.f.dot(tower.mass());
  if (std::fabs(mean) > 1e-10)
    throw std::invalid_argument("observable is not centered on the truncated tower");
  m.F.reserve(static_cast<std::size_t>(n) + 1);
  m.F.push_back(m.f);
  Eigen::VectorXd Lk = m.f;
  for (int k = 1; k <= n; ++k) {
    Lk = tower.apply_transfer(Lk);
    m.F.push_back(m.F.back() + Lk);
  }
  return m;
}

Eigen::VectorXd transfer_of_increment(const TruncatedTower& tower, const MartingaleData& m, int k) {
  if (k < 0 || k + 1 > m.n) throw std::out_of_range("increment index out of range");
  return tower.apply_transfer_edges([&](int x, int y) { return m.A(k, x, y); });
}

double conditional_moment_sup(const TruncatedTower& tower, const MartingaleData& m, int k,
                              double r) {
  if (k < 0 || k + 1 > m.n) throw std::out_of_range("increment index out of range");
  const Eigen::VectorXd v = tower.apply_transfer_edges(
      [&](int x, int y) { return std::pow(std::fabs(m.A(k, x, y)), r); });
  double sup = 0;
  for (int c = 0; c < tower.size(); ++c)
    if (tower.charged(c)) sup = std::max(sup, v(c));
  return sup;
}

ReconstructionCheck sample_increments(const TruncatedTower& tower, MartingaleData& m, int orbits,
                                      std::uint64_t seed) {
  ReconstructionCheck chk;
  chk.orbits = orbits;
  const int n = m.n;
  m.D.resize(orbits, n);
  for (int r = 0; r < orbits; ++r) {
    Rng rng(derive_seed(seed, 0xD1FF, static_cast<std::uint64_t>(r)));
    const auto xs = sample_cell_orbit(tower, n + 1, rng);
    double birkhoff = 0, recon = 0;
    for (int k = 0; k < n; ++k) {
      birkhoff += m.f(xs[k]);
      const double d = m.A(k, xs[k], xs[k + 1]);
      m.D(r, k) = d;
      recon += d;
    }
    recon += m.F[n](xs[n]) - m.f(xs[n]);
    chk.max_residual = std::max(chk.max_residual, std::fabs(birkhoff - recon));
  }
  return chk;
}

std::vector<double> lemma_Fk_ratio(const TruncatedTower& tower, const Observable& f, int k_max) {
  const Eigen::VectorXd fv = tower.values(f);
  const int S = tower.states();
  const int H = tower.h_max();
  std::vector<double> ratio(static_cast<std::size_t>(k_max) + 1, 0.0);
  Eigen::VectorXd Lk = fv, F = fv;
  for (int k = 0; k <= k_max; ++k) {
    const Eigen::VectorXd Lnext = tower.apply_transfer(Lk);
    const Eigen::VectorXd Fnext = F + Lnext;
    std::vector<double> lo(S, INFINITY), hi(S, -INFINITY);
    for (int c : tower.base_cells())
      if (tower.charged(c)) {
        const int s = tower.state(c);
        lo[s] = std::min(lo[s], Fnext(c));
        hi[s] = std::max(hi[s], Fnext(c));
      }
    double best = 0;
    for (int s = 0; s < S; ++s)
      for (int h = 1; h <= H; ++h) {
        const int x = tower.index(s, h, h - 1);
        if (!tower.charged(x)) continue;
        const double denom = 1.0 + std::min(h - 1, k);
        for (int t = 0; t < S; ++t) {
          if (tower.jacobian(s, h, t) <= 0 || !std::isfinite(lo[t])) continue;
          const double d = std::max(std::fabs(F(x) - lo[t]), std::fabs(F(x) - hi[t]));
          best = std::max(best, d / denom);
        }
      }
    ratio[k] = best;
    Lk = Lnext;
    F = Fnext;
  }
  return ratio;
}

namespace {

// Enumerates backward paths y_0..y_{len-1} with y_{t+1} = T y_t and
// T y_{len-1} = end, calling visit(path, weight).
void backward_paths(const TruncatedTower& tower, int end, int len, std::vector<int>& path,
                    double weight,
                    const std::function<void(const std::vector<int>&, double)>& visit) {
  if (len == 0) {
    visit(path, weight);
    return;
  }
  for (const auto& [y, g] : tower.preimages(end)) {
    path[len - 1] = y;
    backward_paths(tower, y, len - 1, path, weight * g, visit);
  }
}

}  // namespace

ConcentrationData concentration_decomposition(const TruncatedTower& tower,
                                              const SeparatelyLipschitzFunctional& K, int k_max,
                                              std::span<const int> orbit, int reference_cell) {
  const int m = static_cast<int>(K.window());
  if (m > k_max) throw std::invalid_argument("functional window exceeds k_max");
  if (static_cast<int>(orbit.size()) < k_max + m + 1)
    throw std::invalid_argument("orbit too short for the requested k_max");
  const auto& base = tower.base_cells();
  if (reference_cell < 0) {
    double best = -1;
    for (int c : base)
      if (tower.mass()(c) > best) {
        best = tower.mass()(c);
        reference_cell = c;
      }
  }
  if (!tower.is_base(reference_cell)) throw std::invalid_argument("reference cell must be in the base");

  ConcentrationData out;
  out.k_max = k_max;
  out.reference_cell = reference_cell;
  out.orbit.assign(orbit.begin(), orbit.end());
  const int xs = reference_cell;

  std::vector<TowerPoint> args(static_cast<std::size_t>(m));
  auto evalK = [&](const std::function<int(int)>& cell_at) {
    for (int p = 0; p < m; ++p) args[p] = tower.point(cell_at(p));
    return K(args);
  };

  // Direct conditional expectations.
  out.direct.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  std::vector<int> path;
  for (int k = 0; k <= k_max; ++k) {
    path.assign(static_cast<std::size_t>(k), 0);
    double acc = 0;
    backward_paths(tower, orbit[k], k, path, 1.0, [&](const std::vector<int>& y, double w) {
      acc += w * evalK([&](int p) { return p < k ? y[p] : orbit[p]; });
    });
    out.direct[k] = acc;
  }

  const RenewalData rd = compute_renewal(tower.model(), k_max);
  const auto Tc = cell_renewal_operators(tower, rd.T, k_max);
  std::vector<int> base_pos(static_cast<std::size_t>(tower.size()), -1);
  for (std::size_t b = 0; b < base.size(); ++b) base_pos[base[b]] = static_cast<int>(b);

  out.reconstructed.assign(static_cast<std::size_t>(k_max) + 1, std::nan(""));
  int last_k = -1;
  std::vector<Eigen::VectorXd> w_last;
  for (int k = 0; k <= k_max; ++k) {
    const int xk = orbit[k];
    if (!tower.is_base(xk)) continue;
    std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(k) + 1,
                                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(base.size())));
    for (int i = 0; i <= k; ++i) {
      for (std::size_t b = 0; b < base.size(); ++b) {
        const int x = base[b];
        if (!tower.charged(x)) continue;
        path.assign(static_cast<std::size_t>(i), 0);
        double acc = 0;
        backward_paths(tower, x, i, path, 1.0, [&](const std::vector<int>& y, double g) {
          int j = -1;
          for (int t = i - 1; t >= 0; --t)
            if (tower.is_base(y[t])) {
              j = t;
              break;
            }
          auto tail_cell = [&](int p) { return (i == k && p == k) ? x : orbit[p]; };
          const double k1 = evalK([&](int p) {
            if (p < i) return y[p];
            if (p == i) return x;
            if (p < k) return xs;
            return tail_cell(p);
          });
          const double k2 = evalK([&](int p) {
            if (p <= j) return y[p];
            if (p < k) return xs;
            return tail_cell(p);
          });
          acc += g * (k1 - k2);
        });
        w[i](static_cast<Eigen::Index>(b)) = acc;
      }
    }
    double rec = evalK([&](int p) { return p < k ? xs : orbit[p]; });
    const int row = base_pos[xk];
    for (int i = 0; i <= k; ++i) rec += Tc[k - i].row(row).dot(w[i]);
    out.reconstructed[k] = rec;
    out.max_residual = std::max(out.max_residual, std::fabs(rec - out.direct[k]));
    last_k = k;
    w_last = std::move(w);
  }

  const auto& lip = K.lip_profile();
  auto lip_at = [&](int a) { return (a >= 0 && a < m) ? lip[a] : 0.0; };
  if (last_k >= 0) {
    for (int i = 0; i <= last_k; ++i) {
      out.w_norm.push_back(w_last[i].cwiseAbs().maxCoeff());
      double bound = 0;
      for (int a = 0; a <= i; ++a) bound += lip_at(a) * tower.model().tail().survival(i - a + 1);
      out.w_bound.push_back(bound);
    }
  }

  double q = tower.model().tail().q();
  if (!std::isfinite(q)) q = 2.0;
  for (int k = 0; k < k_max; ++k) {
    const int h = tower.level(orbit[k]);
    double bound = 0;
    for (int a = 0; a <= k - h; ++a) {
      const double b = static_cast<double>(k - h - a) + 1.0;
      bound += lip_at(a) * std::min((h + 1) * std::pow(b, -q), std::pow(b, -(q - 1)));
    }
    for (int a = std::max(0, k - h + 1); a <= k; ++a) bound += lip_at(a);
    const double diff = std::fabs(out.direct[k] - out.direct[k + 1]);
    out.increment_ratio.push_back(bound > 0 ? diff / bound : (diff < 1e-12 ? 0.0 : INFINITY));
  }

  out.maximal = maximal_function(lip);
  return out;
}

}  // namespace towerstat
