#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "towerstat/stable.hpp"

namespace towerstat {

namespace bq = boost::math::quadrature;
using std::numbers::pi;

StableLaw StableLaw::from_parameters(double q, double sigma, double beta) {
  StableLaw law;
  law.q = q;
  const double sq = std::pow(sigma, q);
  law.c = {-sq, sq * beta * std::tan(pi * q / 2)};
  validate(law);
  return law;
}

std::complex<double> StableLaw::effective_c() const { return c * std::pow(scale, q); }

double StableLaw::sigma() const { return std::pow(-effective_c().real(), 1.0 / q); }

double StableLaw::beta() const {
  const double tn = std::tan(pi * q / 2);
  if (std::fabs(tn) < 1e-12) return 0.0;
  return effective_c().imag() / (-effective_c().real() * tn);
}

std::complex<double> StableLaw::characteristic(double t) const {
  if (t == 0) return 1.0;
  const std::complex<double> v = std::exp(effective_c() * std::pow(std::fabs(t), q));
  return t > 0 ? v : std::conj(v);
}

void validate(const StableLaw& law) {
  if (!(law.q > 1 && law.q <= 2)) throw std::invalid_argument("stable index must lie in (1,2]");
  if (!(law.c.real() < 0)) throw std::invalid_argument("stable constant needs Re(c) < 0");
  if (!(law.scale > 0)) throw std::invalid_argument("stable scale must be positive");
  if (std::fabs(law.beta()) > 1 + 1e-9)
    throw std::invalid_argument("stable constant outside the admissible skewness range");
}

QuadratureValue stable_survival_checked(const StableLaw& law, double s) {
  validate(law);
  using cd = std::complex<double>;
  const cd c = law.effective_c();
  const double q = law.q;
  // P(Z > s) = 1/2 + (1/π) Im ∫_0^∞ (e^{-ist} ψ(t) - e^{-t}) dt / t. The integrand is
  // analytic for Re t > 0, so the path is turned onto a ray t = r e^{∓iθ} on which
  // e^{-ist} decays; the cost no longer grows with |s|. θ is capped so that
  // Re(c t^q) stays negative along the whole sector.
  const double alpha = std::arg(c) < 0 ? std::arg(c) + 2 * pi : std::arg(c);
  const int dir = s >= 0 ? 1 : -1;
  const double bound = dir > 0 ? (alpha - pi / 2) / q : (3 * pi / 2 - alpha) / q;
  const double theta = std::min(pi / 4, 0.5 * bound);
  const cd w = std::polar(1.0, -dir * theta);
  auto f = [=](double r) {
    const cd t = r * w;
    return ((std::exp(c * std::pow(t, q) - cd(0, s) * t) - std::exp(-t)) / r).imag();
  };
  bq::exp_sinh<double> es;
  double err = 0;
  const double J = es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14, &err);
  QuadratureValue out;
  out.value = std::clamp(0.5 + J / pi, 0.0, 1.0);
  out.error = err / pi;
  out.converged = std::isfinite(J) && out.error < 1e-8;
  return out;
}

double stable_survival(const StableLaw& law, double s) { return stable_survival_checked(law, s).value; }

double stable_cdf(const StableLaw& law, double s) { return 1.0 - stable_survival(law, s); }

double stable_quantile(const StableLaw& law, double u) {
  if (!(u > 0 && u < 1)) throw std::invalid_argument("quantile level must lie in (0,1)");
  const double sig = law.sigma();
  double lo = -sig, hi = sig;
  for (int k = 0; stable_cdf(law, lo) > u; ++k) {
    if (k > 60) throw std::runtime_error("stable quantile: lower tail not resolved");
    lo *= 2;
  }
  for (int k = 0; stable_cdf(law, hi) < u; ++k) {
    if (k > 60) throw std::runtime_error("stable quantile: upper tail not resolved");
    hi *= 2;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1 + std::fabs(lo) + std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (stable_cdf(law, mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double stable_abs_moment(const StableLaw& law, double p) {
  validate(law);
  if (!(p > 0 && p < law.q)) throw std::invalid_argument("absolute moment needs 0 < p < q");
  const std::complex<double> c = law.effective_c();
  const double a = c.real(), b = c.imag(), q = law.q;
  // 1 - Re ψ(t) = -expm1(a t^q) cos(b t^q) + 2 sin²(b t^q / 2)
  // Divided by t^q first so that tiny t neither underflows nor overflows.
  auto h = [=](double t) {
    const double tq = std::pow(t, q);
    const double tail = std::pow(t, q - p - 1);
    if (tq == 0) return -a * tail;
    const double sb = std::sin(0.5 * b * tq);
    return (-std::expm1(a * tq) * std::cos(b * tq) + 2 * sb * sb) / tq * tail;
  };
  bq::tanh_sinh<double> ts;
  bq::exp_sinh<double> es;
  const double I = ts.integrate(h, 0.0, 1.0) + es.integrate(h, 1.0, std::numeric_limits<double>::infinity());
  return 2.0 / pi * std::tgamma(p + 1) * std::sin(p * pi / 2) * I;
}

double sample_stable(const StableLaw& law, Rng& rng) {
  const double alpha = law.q;
  const double sig = law.sigma();
  const double beta = law.beta();
  const double V = pi * (uniform_open0(rng) - 0.5);
  const double W = -std::log(uniform_open0(rng));
  if (alpha == 2.0) return sig * 2.0 * std::sin(V) * std::sqrt(W);
  const double zeta = -beta * std::tan(pi * alpha / 2);
  const double xi = std::atan(-zeta) / alpha;
  const double X = std::pow(1 + zeta * zeta, 1 / (2 * alpha)) * std::sin(alpha * (V + xi)) /
                   std::pow(std::cos(V), 1 / alpha) *
                   std::pow(std::cos(V - alpha * (V + xi)) / W, (1 - alpha) / alpha);
  return sig * X;
}

std::vector<double> sample_stable(const StableLaw& law, std::size_t n, std::uint64_t seed) {
  validate(law);
  Rng rng(derive_seed(seed, 0x57AB, 0));
  std::vector<double> out(n);
  for (auto& x : out) x = sample_stable(law, rng);
  return out;
}

TabulatedCdf::TabulatedCdf(const StableLaw& law, int points, double tail) : law_(law) {
  if (points < 2) throw std::invalid_argument("tabulated CDF needs two points");
  scale_ = law.sigma();
  lo_ = stable_quantile(law, tail);
  hi_ = stable_quantile(law, 1.0 - tail);
  // Uniform in asinh(s/σ): fine near the mode, coarse in the power-law tail.
  const double a = std::asinh(lo_ / scale_), b = std::asinh(hi_ / scale_);
  step_ = (b - a) / (points - 1);
  values_.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) values_[i] = stable_cdf(law, scale_ * std::sinh(a + step_ * i));
  // Enforce monotonicity against quadrature jitter.
  for (std::size_t i = 1; i < values_.size(); ++i) values_[i] = std::max(values_[i], values_[i - 1]);
}

double TabulatedCdf::operator()(double s) const {
  if (s < lo_ || s >= hi_) return stable_cdf(law_, s);
  const double x = (std::asinh(s / scale_) - std::asinh(lo_ / scale_)) / step_;
  const auto i = static_cast<std::size_t>(std::max(0.0, x));
  if (i + 1 >= values_.size()) return values_.back();
  const double f = x - static_cast<double>(i);
  return values_[i] + f * (values_[i + 1] - values_[i]);
}

}  // namespace towerstat
