#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "towerstat/renewal.hpp"
#include "towerstat/spectral.hpp"

namespace towerstat {

namespace {

// e^{ix} - 1 without cancellation.
cdouble expm1i(double x) {
  const double s = std::sin(0.5 * x);
  return {-2.0 * s * s, std::sin(x)};
}

}  // namespace

EigenEstimate perturbed_eigenvalue(const TowerModel& model, const InducedObservable& fY,
                                   double t) {
  if (fY.h_max() < model.h_max())
    throw std::invalid_argument("induced observable shorter than the tower");
  const TailLaw& law = model.tail();
  const int S = model.base_states();
  const std::int64_t H = model.h_max();
  EigenEstimate out;

  if (S == 1) {
    long double re = 0, im = 0;
    for (std::int64_t h = 1; h <= H; ++h) {
      const double p = law.pmf(h);
      if (p == 0) continue;
      const cdouble e = expm1i(t * fY(h));
      re += p * e.real();
      im += p * e.imag();
    }
    out.deviation = {static_cast<double>(re), static_cast<double>(im)};
    out.lambda = 1.0 + out.deviation;
    out.xi = Eigen::VectorXcd::Ones(1);
    return out;
  }

  // M_t - I = Σ_h (e^{i t f_Y(h)} - 1) R_h + (Σ_h R_h - I).
  const Eigen::VectorXd& pi = model.base_distribution();
  Eigen::MatrixXcd Mdev = Eigen::MatrixXcd::Zero(S, S);
  Eigen::MatrixXd Rsum = Eigen::MatrixXd::Zero(S, S);
  for (std::int64_t h = 1; h <= H; ++h) {
    const double p = law.pmf(h);
    if (p == 0) continue;
    const cdouble e = expm1i(t * fY(h));
    for (int s = 0; s < S; ++s) {
      const Eigen::VectorXd row = model.transition_row(s, h);
      for (int s2 = 0; s2 < S; ++s2) {
        const double r = pi(s) * p * row(s2) / pi(s2);
        Mdev(s2, s) += e * r;
        Rsum(s2, s) += r;
      }
    }
  }
  Mdev += (Rsum - Eigen::MatrixXd::Identity(S, S)).cast<cdouble>();
  const Eigen::MatrixXcd M = Mdev + Eigen::MatrixXcd::Identity(S, S);

  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(S) / std::sqrt(static_cast<double>(S));
  cdouble lam = 0;
  out.converged = false;
  for (int it = 1; it <= 100000; ++it) {
    Eigen::VectorXcd w = M * v;
    const cdouble next = v.dot(w);  // v normalised
    const double nw = w.norm();
    if (nw == 0) break;
    v = w / nw;
    out.iterations = it;
    if (std::abs(next - lam) < 1e-12 && it > 1) {
      lam = next;
      out.converged = true;
      break;
    }
    lam = next;
  }
  out.deviation = v.dot(Mdev * v) / v.squaredNorm();
  out.lambda = 1.0 + out.deviation;
  out.xi = v;

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mags.rbegin(), mags.rend());
  out.gap_ratio = mags.size() > 1 && mags[0] > 0 ? mags[1] / mags[0] : 0.0;
  out.gap_collapse = out.gap_ratio > 0.999;
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0 && hi >= lo) || count < 1) throw std::invalid_argument("bad log grid");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * i / (count - 1));
  return g;
}

SpectralCurve lambda_curve(const TowerModel& model, const InducedObservable& fY,
                           std::span<const double> t) {
  SpectralCurve c;
  for (double ti : t) {
    const EigenEstimate e = perturbed_eigenvalue(model, fY, ti);
    c.t.push_back(ti);
    c.lambda.push_back(e.lambda);
    c.deviation.push_back(e.deviation);
    c.gap_ratio.push_back(e.gap_ratio);
    c.xi.push_back(e.xi);
  }
  return c;
}

namespace {

struct Projection {
  cdouble c, d;
  double cost;
};

// Least squares of y_j = c + d x_j over complex data with a real design.
Projection project(const std::vector<cdouble>& y, const std::vector<double>& t, double q,
                   double kappa) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::MatrixXd Y(n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    X(j, 0) = 1.0;
    X(j, 1) = std::pow(t[j], kappa - q);
    Y(j, 0) = y[j].real();
    Y(j, 1) = y[j].imag();
  }
  const Eigen::MatrixXd B = X.colPivHouseholderQr().solve(Y);
  const double cost = (X * B - Y).squaredNorm();
  return {{B(0, 0), B(0, 1)}, {B(1, 0), B(1, 1)}, cost};
}

}  // namespace

StableConstantFit fit_stable_constant(const SpectralCurve& curve, double q, double epsilon) {
  const std::size_t n = curve.t.size();
  if (n < 4) throw std::invalid_argument("need at least four grid points");
  if (curve.deviation.size() != n) throw std::invalid_argument("curve without deviations");
  (void)epsilon;
  std::vector<cdouble> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = curve.deviation[j] / std::pow(curve.t[j], q);

  // Coarse scan then golden section on kappa.
  const double lo = q + 1e-3, hi = q + 2.0;
  double best_k = lo, best = std::numeric_limits<double>::infinity();
  const int scan = 200;
  for (int i = 0; i <= scan; ++i) {
    const double k = lo + (hi - lo) * i / scan;
    const double c = project(y, curve.t, q, k).cost;
    if (c < best) {
      best = c;
      best_k = k;
    }
  }
  double a = std::max(lo, best_k - (hi - lo) / scan), b = std::min(hi, best_k + (hi - lo) / scan);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double x1 = b - g * (b - a), x2 = a + g * (b - a);
    if (project(y, curve.t, q, x1).cost < project(y, curve.t, q, x2).cost)
      b = x2;
    else
      a = x1;
  }
  const double kappa = 0.5 * (a + b);
  const Projection pr = project(y, curve.t, q, kappa);

  StableConstantFit fit;
  fit.c = pr.c;
  fit.d = pr.d;
  fit.kappa = kappa;
  double scale = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = std::abs(curve.deviation[j] - fit.c * std::pow(curve.t[j], q));
    fit.residuals.push_back(r);
    scale = std::max(scale, std::abs(curve.deviation[j]));
  }
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < n; ++j)
    if (fit.residuals[j] > 1e-12 * std::abs(curve.deviation[j])) {
      xs.push_back(curve.t[j]);
      ys.push_back(fit.residuals[j]);
    }
  if (xs.size() < 3) {
    fit.machine_floor = true;
    fit.residual_exponent = std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.residual_exponent = loglog_slope(xs, ys);
  }
  for (std::size_t j = 1; j < n; ++j)
    if (curve.t[j] > curve.t[j - 1] && fit.residuals[j] < fit.residuals[j - 1])
      fit.monotone_residuals = false;
  return fit;
}

}  // namespace towerstat
