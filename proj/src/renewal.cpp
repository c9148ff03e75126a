#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "towerstat/renewal.hpp"

namespace towerstat {

std::vector<Eigen::MatrixXd> first_return_operators(const TowerModel& model, int N) {
  if (N < 0) throw std::invalid_argument("N must be nonnegative");
  const int S = model.base_states();
  const Eigen::VectorXd& pi = model.base_distribution();
  std::vector<Eigen::MatrixXd> R(static_cast<std::size_t>(N) + 1, Eigen::MatrixXd::Zero(S, S));
  const std::int64_t top = std::min<std::int64_t>(N, model.h_max());
  for (std::int64_t n = 1; n <= top; ++n) {
    const double p = model.tail().pmf(n);
    if (p == 0) continue;
    for (int s = 0; s < S; ++s) {
      const Eigen::VectorXd row = model.transition_row(s, n);
      for (int t = 0; t < S; ++t) R[n](t, s) = pi(s) * p * row(t) / pi(t);
    }
  }
  return R;
}

std::vector<double> scalar_renewal_sequence(std::span<const double> r, int N) {
  if (r.empty()) return {};
  if (static_cast<int>(r.size()) <= N) N = static_cast<int>(r.size()) - 1;
  std::vector<long double> u(static_cast<std::size_t>(N) + 1, 0.0L);
  u[0] = 1.0L;
  for (int n = 1; n <= N; ++n) {
    long double acc = 0;
    for (int k = 1; k <= n; ++k) acc += static_cast<long double>(r[k]) * u[n - k];
    u[n] = acc;
  }
  return {u.begin(), u.end()};
}

Eigen::MatrixXd averaging_projection(const TowerModel& model) {
  const int S = model.base_states();
  return Eigen::VectorXd::Ones(S) * model.base_distribution().transpose();
}

RenewalData compute_renewal(const TowerModel& model, int N) {
  RenewalData d;
  d.R = first_return_operators(model, N);
  d.Pi = averaging_projection(model);
  if (model.base_states() == 1) {
    std::vector<double> r(d.R.size());
    for (std::size_t n = 0; n < r.size(); ++n) r[n] = d.R[n](0, 0);
    const auto u = scalar_renewal_sequence(r, N);
    d.T.reserve(u.size());
    for (double v : u) d.T.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  } else {
    d.T = renewal_sequence(d.R, N);
  }
  d.E.reserve(d.T.size());
  for (const auto& T : d.T) d.E.push_back(T - d.Pi * T * d.Pi);

  d.norm_R.resize(d.R.size());
  d.R_constant = 0;
  for (std::size_t n = 0; n < d.R.size(); ++n) {
    d.norm_R[n] = operator_norm(d.R[n]);
    const double p = model.tail().pmf(static_cast<std::int64_t>(n));
    if (p > 0) d.R_constant = std::max(d.R_constant, d.norm_R[n] / p);
  }
  for (std::size_t n = 0; n + 1 < d.T.size(); ++n)
    d.norm_increment.push_back(operator_norm(d.T[n + 1] - d.T[n]));
  for (const auto& E : d.E) d.norm_deviation.push_back(operator_norm(E));
  return d;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::nan("");
  const double den = m * sxx - sx * sx;
  return den == 0 ? std::nan("") : (m * sxy - sx * sy) / den;
}

DecayReport renewal_decay_report(const std::vector<Eigen::MatrixXd>& T, const Eigen::MatrixXd& Pi,
                                 double q, int lo, int hi) {
  const int N = static_cast<int>(T.size()) - 1;
  if (N < 2) throw std::invalid_argument("renewal sequence too short for a decay fit");
  DecayReport rep;
  rep.window_lo = lo > 0 ? lo : std::max(1, N / 10);
  rep.window_hi = hi > 0 ? std::min(hi, N - 1) : N - 1;
  if (rep.window_lo >= rep.window_hi) throw std::invalid_argument("empty decay window");

  std::vector<double> inc(static_cast<std::size_t>(N)), dev(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n < N; ++n) inc[n] = operator_norm(T[n + 1] - T[n]);
  for (int n = 0; n <= N; ++n) dev[n] = operator_norm(T[n] - Pi * T[n] * Pi);

  std::vector<double> xs, yi, yd;
  for (int n = rep.window_lo; n <= rep.window_hi; ++n) {
    xs.push_back(n);
    yi.push_back(inc[n]);
    yd.push_back(dev[n]);
    rep.constant_increment = std::max(rep.constant_increment, std::pow(n, q) * inc[n]);
    rep.constant_deviation = std::max(rep.constant_deviation, std::pow(n, q) * dev[n]);
  }
  rep.exact_increment = std::all_of(yi.begin(), yi.end(), [](double v) { return v == 0; });
  rep.exact_deviation = std::all_of(yd.begin(), yd.end(), [](double v) { return v == 0; });
  rep.slope_increment = rep.exact_increment ? 0.0 : loglog_slope(xs, yi);
  rep.slope_deviation = rep.exact_deviation ? 0.0 : loglog_slope(xs, yd);

  // Faster than any power: somewhere in the window the increments fall far
  // below n^{-2q} relative to their peak, or the fitted slope is far steeper than -q.
  const double peak = *std::max_element(inc.begin(), inc.end());
  bool collapsed = false;
  for (std::size_t i = 0; i < xs.size(); ++i)
    collapsed = collapsed || (peak > 0 && yi[i] < 1e-3 * peak * std::pow(xs[i], -2.0 * q));
  rep.superpolynomial =
      collapsed || (!rep.exact_increment && std::isfinite(rep.slope_increment) &&
                    rep.slope_increment < -4.0 * q);
  return rep;
}

}  // namespace towerstat
