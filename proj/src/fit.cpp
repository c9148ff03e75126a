#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "towerstat/fit.hpp"
#include "towerstat/rng.hpp"

namespace towerstat {

GrowthFit fit_growth_exponent(std::span<const double> n, std::span<const double> v, int bootstrap,
                              std::uint64_t seed) {
  if (n.size() != v.size()) throw std::invalid_argument("grid and values differ in length");
  if (n.size() < 2) throw std::invalid_argument("growth fit needs at least two points");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(v[i] > 0)) throw std::invalid_argument("growth fit needs positive values");
    if (!(n[i] > 1)) throw std::invalid_argument("growth fit needs n > 1");
  }
  const auto m = static_cast<Eigen::Index>(n.size());
  const auto [mn, mx] = std::minmax_element(n.begin(), n.end());
  GrowthFit fit;
  fit.gamma_fixed = m < 6 || *mx / *mn < 100.0;
  if (fit.gamma_fixed) fit.note = "gamma held at 0: need >= 6 points spanning >= 2 decades";
  const Eigen::Index cols = fit.gamma_fixed ? 2 : 3;

  Eigen::MatrixXd X(m, cols);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ln = std::log(n[i]);
    X(i, 0) = 1.0;
    X(i, 1) = ln;
    if (cols == 3) X(i, 2) = std::log(ln);
    y(i) = std::log(v[i]);
  }
  const auto qr = X.colPivHouseholderQr();
  const Eigen::VectorXd b = qr.solve(y);
  const Eigen::VectorXd res = y - X * b;
  fit.log_C = b(0);
  fit.beta = b(1);
  fit.gamma = cols == 3 ? b(2) : 0.0;
  fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(m));
  fit.beta_lo = fit.beta_hi = fit.beta;
  fit.gamma_lo = fit.gamma_hi = fit.gamma;

  if (bootstrap > 1) {
    Rng rng(derive_seed(seed, 0xF17, 0));
    std::vector<double> bs, gs;
    const Eigen::VectorXd fitted = X * b;
    for (int r = 0; r < bootstrap; ++r) {
      Eigen::VectorXd yb(m);
      for (Eigen::Index i = 0; i < m; ++i)
        yb(i) = fitted(i) + res(static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(m)));
      const Eigen::VectorXd bb = qr.solve(yb);
      bs.push_back(bb(1));
      gs.push_back(cols == 3 ? bb(2) : 0.0);
    }
    auto pct = [](std::vector<double> x, double p) {
      std::sort(x.begin(), x.end());
      const double pos = p * static_cast<double>(x.size() - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double f = pos - static_cast<double>(i);
      return i + 1 < x.size() ? x[i] * (1 - f) + x[i + 1] * f : x.back();
    };
    fit.beta_lo = pct(bs, 0.025);
    fit.beta_hi = pct(bs, 0.975);
    fit.gamma_lo = pct(gs, 0.025);
    fit.gamma_hi = pct(gs, 0.975);
  }
  return fit;
}

}  // namespace towerstat
