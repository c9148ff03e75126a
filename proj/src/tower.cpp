#include <cmath>
#include <stdexcept>

#include "towerstat/tower.hpp"

namespace towerstat {

namespace {

void check_row(const Eigen::VectorXd& row, int S) {
  if (row.size() != S) throw std::invalid_argument("transition row has wrong length");
  if ((row.array() < 0.0).any())
    throw std::invalid_argument("transition row has a negative entry");
  if (std::fabs(row.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("transition row does not sum to 1");
}

}  // namespace

TowerModel::TowerModel(TailLaw tail) : tail_(std::move(tail)), S_(1) {
  rows_ = {1.0};
  finish();
}

TowerModel::TowerModel(TailLaw tail, const Eigen::MatrixXd& P) : tail_(std::move(tail)) {
  if (P.rows() != P.cols() || P.rows() < 1)
    throw std::invalid_argument("base transition matrix must be square");
  S_ = static_cast<int>(P.rows());
  rows_.resize(static_cast<std::size_t>(S_) * S_);
  for (int s = 0; s < S_; ++s) {
    Eigen::VectorXd r = P.row(s).transpose();
    check_row(r, S_);
    for (int t = 0; t < S_; ++t) rows_[s * S_ + t] = r(t);
  }
  finish();
}

TowerModel::TowerModel(TailLaw tail, int base_states, const TransitionRule& rule)
    : tail_(std::move(tail)), S_(base_states) {
  if (S_ < 1) throw std::invalid_argument("need at least one base state");
  if (S_ == 1 || !rule) {
    if (S_ != 1 && !rule)
      throw std::invalid_argument("multi-state base needs a transition rule");
    rows_ = {1.0};
    if (rule) check_row(rule(0, 1), 1);
  } else {
    const auto H = tail_.h_max();
    if (static_cast<double>(H) * S_ * S_ > 5e7)
      throw std::invalid_argument("height-dependent transition table too large");
    height_dependent_ = true;
    rows_.resize(static_cast<std::size_t>(H) * S_ * S_);
    for (std::int64_t h = 1; h <= H; ++h)
      for (int s = 0; s < S_; ++s) {
        Eigen::VectorXd r = rule(s, h);
        check_row(r, S_);
        for (int t = 0; t < S_; ++t)
          rows_[((h - 1) * S_ + s) * S_ + t] = r(t);
      }
  }
  finish();
}

const double* TowerModel::row_ptr(int state, std::int64_t height) const {
  if (!height_dependent_) return rows_.data() + state * S_;
  return rows_.data() + ((height - 1) * S_ + state) * S_;
}

Eigen::VectorXd TowerModel::transition_row(int state, std::int64_t height) const {
  const double* r = row_ptr(state, height);
  return Eigen::Map<const Eigen::VectorXd>(r, S_);
}

void TowerModel::finish() {
  cum_rows_.resize(rows_.size());
  for (std::size_t off = 0; off < rows_.size(); off += S_) {
    double acc = 0;
    for (int t = 0; t < S_; ++t) {
      acc += rows_[off + t];
      cum_rows_[off + t] = acc;
    }
    cum_rows_[off + S_ - 1] = 1.0;
  }

  kernel_ = Eigen::MatrixXd::Zero(S_, S_);
  if (!height_dependent_) {
    for (int s = 0; s < S_; ++s)
      for (int t = 0; t < S_; ++t) kernel_(s, t) = rows_[s * S_ + t];
  } else {
    for (std::int64_t h = 1; h <= tail_.h_max(); ++h) {
      const double p = tail_.pmf(h);
      if (p == 0) continue;
      for (int s = 0; s < S_; ++s)
        for (int t = 0; t < S_; ++t) kernel_(s, t) += p * row_ptr(s, h)[t];
    }
  }

  if (S_ == 1) {
    pi_ = Eigen::VectorXd::Ones(1);
  } else {
    // π^T K = π^T with Σ π = 1: replace one equation by the normalisation.
    Eigen::MatrixXd A = kernel_.transpose() - Eigen::MatrixXd::Identity(S_, S_);
    A.row(S_ - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(S_);
    b(S_ - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < S_)
      throw std::invalid_argument("induced base chain has no unique stationary law");
    pi_ = lu.solve(b);
    if ((pi_.array() <= 0.0).any())
      throw std::invalid_argument("induced base chain is not irreducible");
  }

  mu_Y_ = 1.0 / tail_.mean();

  // Column heights under μ are size biased: P(H = h) = μ(Y) h p_h.
  const auto H = tail_.h_max();
  auto cs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(H) + 1, 0.0);
  long double acc = 0;
  for (std::int64_t h = H; h >= 1; --h) {
    acc += static_cast<long double>(h) * tail_.pmf(h);
    (*cs)[h - 1] = static_cast<double>(acc);
  }
  const long double total = acc;
  for (auto& v : *cs) v = static_cast<double>(v / total);
  (*cs)[0] = 1.0;
  column_surv_ = cs;
}

bool TowerModel::valid(const TowerPoint& x) const {
  return x.state >= 0 && x.state < S_ && x.height >= 1 && x.height <= tail_.h_max() &&
         x.level >= 0 && x.level < x.height;
}

int TowerModel::sample_next_state(int state, std::int64_t height, Rng& rng) const {
  if (S_ == 1) return 0;
  const double* c = height_dependent_ ? cum_rows_.data() + ((height - 1) * S_ + state) * S_
                                      : cum_rows_.data() + state * S_;
  const double u = uniform01(rng);
  int t = 0;
  while (t < S_ - 1 && c[t] <= u) ++t;
  return t;
}

TowerPoint TowerModel::iterate(const TowerPoint& x, Rng& rng) const {
  if (!valid(x)) throw std::invalid_argument("invalid tower point");
  if (x.level + 1 < x.height) return {x.state, x.height, x.level + 1};
  TowerPoint y;
  y.state = sample_next_state(x.state, x.height, rng);
  y.height = tail_.sample(rng);
  y.level = 0;
  return y;
}

TowerPoint TowerModel::sample_stationary(Rng& rng) const {
  TowerPoint x;
  if (S_ > 1) {
    const double u = uniform01(rng);
    double acc = 0;
    x.state = S_ - 1;
    for (int s = 0; s < S_; ++s) {
      acc += pi_(s);
      if (u < acc) {
        x.state = s;
        break;
      }
    }
  }
  x.height = invert_survival(*column_surv_, uniform_open0(rng));
  x.level = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(x.height));
  if (x.level >= x.height) x.level = x.height - 1;
  return x;
}

TowerModel build_tower(const TailLaw& tail, int base_states, const TransitionRule& rule) {
  return TowerModel(tail, base_states, rule);
}

}  // namespace towerstat
