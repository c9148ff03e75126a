#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "towerstat/sequences.hpp"

namespace towerstat {

double abs_pow(double x, double r) {
  x = std::fabs(x);
  const double ri = std::floor(r);
  if (ri >= 0 && ri <= 8) {
    double acc = 1.0;
    for (int k = 0; k < static_cast<int>(ri); ++k) acc *= x;
    if (r == ri) return acc;
    if (r - ri == 0.5) return acc * std::sqrt(x);
  }
  return std::pow(x, r);
}

DecaySequence DecaySequence::power(std::size_t N, double q, double C) {
  DecaySequence c;
  c.q = q;
  c.values.resize(N);
  for (std::size_t n = 0; n < N; ++n) c.values[n] = C * std::pow(static_cast<double>(n + 1), -q);
  return c;
}

double DecaySequence::realized_constant() const {
  double sup = 0;
  for (std::size_t n = 0; n < values.size(); ++n)
    sup = std::max(sup, std::pow(static_cast<double>(n + 1), q) * values[n]);
  return sup;
}

DecaySequence convolve(const DecaySequence& c, const DecaySequence& d) {
  if (c.size() != d.size()) throw std::invalid_argument("convolve needs equal lengths");
  DecaySequence out;
  out.q = std::min(c.q, d.q);
  const std::size_t N = c.size();
  out.values.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    long double acc = 0;
    for (std::size_t i = 0; i <= n; ++i)
      acc += static_cast<long double>(c.values[i]) * d.values[n - i];
    out.values[n] = static_cast<double>(acc);
  }
  return out;
}

KaramataReport karamata_check(const DecaySequence& c, double alpha, double q) {
  const KaramataRegime r = alpha < q   ? KaramataRegime::UpperTail
                           : alpha > q ? KaramataRegime::LowerSum
                                       : KaramataRegime::Critical;
  return karamata_check(c, alpha, q, r);
}

KaramataReport karamata_check(const DecaySequence& c, double alpha, double q,
                              KaramataRegime regime) {
  const bool ok = (regime == KaramataRegime::UpperTail && alpha < q) ||
                  (regime == KaramataRegime::LowerSum && alpha > q) ||
                  (regime == KaramataRegime::Critical && alpha == q);
  if (!ok) throw std::invalid_argument("karamata regime does not match alpha versus q");
  for (double v : c.values)
    if (!(v >= 0)) throw std::invalid_argument("karamata_check needs a nonnegative sequence");

  KaramataReport rep;
  rep.regime = regime;
  const std::size_t N = c.size();
  if (N < 3) return rep;
  // prefix[h] = Σ_{j<h} j^α c_j
  std::vector<long double> prefix(N + 1, 0);
  for (std::size_t h = 0; h < N; ++h) {
    const long double term =
        h == 0 ? 0.0L : std::pow(static_cast<long double>(h), alpha) * c.values[h];
    prefix[h + 1] = prefix[h] + term;
  }
  for (std::size_t n = 2; n < N; ++n) {
    const double dn = static_cast<double>(n);
    double v;
    switch (regime) {
      case KaramataRegime::UpperTail:
        v = std::pow(dn, q - alpha) * static_cast<double>(prefix[N] - prefix[n + 1]);
        break;
      case KaramataRegime::LowerSum:
        v = std::pow(dn, q - alpha) * static_cast<double>(prefix[n]);
        break;
      default:
        v = static_cast<double>(prefix[n]) / std::log(dn);
    }
    rep.normalised.push_back(v);
    if (v > rep.sup) {
      rep.sup = v;
      rep.argsup = n;
    }
  }
  return rep;
}

std::vector<double> maximal_function(std::span<const double> u, std::size_t pad) {
  const auto L = static_cast<std::int64_t>(u.size());
  const auto P = static_cast<std::int64_t>(pad);
  std::vector<double> out(static_cast<std::size_t>(L + 2 * P), 0.0);
  if (L == 0) return out;
  std::vector<double> prefix(static_cast<std::size_t>(L) + 1, 0.0);
  for (std::int64_t i = 0; i < L; ++i) prefix[i + 1] = prefix[i] + std::fabs(u[i]);
  for (std::int64_t n = -P; n < L + P; ++n) {
    const std::int64_t reach = std::max(std::abs(n), std::abs(n - (L - 1)));
    double best = 0;
    for (std::int64_t h = 0; h <= reach; ++h) {
      const std::int64_t lo = std::max<std::int64_t>(0, n - h);
      const std::int64_t hi = std::min<std::int64_t>(L - 1, n + h);
      if (lo > hi) continue;
      best = std::max(best, (prefix[hi + 1] - prefix[lo]) / static_cast<double>(2 * h + 1));
    }
    out[static_cast<std::size_t>(n + P)] = best;
  }
  return out;
}

double lp_norm(std::span<const double> u, double p) {
  if (std::isinf(p)) {
    double m = 0;
    for (double x : u) m = std::max(m, std::fabs(x));
    return m;
  }
  long double acc = 0;
  for (double x : u) acc += abs_pow(x, p);
  return std::pow(static_cast<double>(acc), 1.0 / p);
}

WeightSequence WeightSequence::power(double s, std::size_t head_len) {
  WeightSequence a;
  a.A = 1.0;
  a.s = s;
  a.head.resize(head_len);
  for (std::size_t h = 0; h < head_len; ++h) a.head[h] = std::pow(static_cast<double>(h + 1), -s);
  return a;
}

double WeightSequence::operator()(std::int64_t h) const {
  if (h < 0) return 0.0;
  if (static_cast<std::size_t>(h) < head.size()) return head[static_cast<std::size_t>(h)];
  return A * std::pow(static_cast<double>(h + 1), -s);
}

std::pair<double, double> WeightSequence::moment_tail(std::int64_t from, double beta) const {
  const double t = s - beta;
  if (!(t > 1)) throw std::invalid_argument("weight tail too heavy for this moment");
  from = std::max<std::int64_t>(from, 0);
  long double head_part = 0;
  for (auto h = static_cast<std::size_t>(from); h < head.size(); ++h)
    head_part += head[h] * std::pow(static_cast<long double>(h + 1), beta);
  const auto H0 = std::max<std::int64_t>(from, static_cast<std::int64_t>(head.size()));
  const double x = static_cast<double>(H0 + 1);
  const double integral = std::pow(x, 1.0 - t) / (t - 1.0);
  const double lo = static_cast<double>(head_part) + A * integral;
  const double hi = static_cast<double>(head_part) + A * (integral + std::pow(x, -t));
  return {lo, hi};
}

namespace {

std::span<const double> trim(std::span<const double> u) {
  std::size_t b = 0, e = u.size();
  while (b < e && u[b] == 0) ++b;
  while (e > b && u[e - 1] == 0) --e;
  return u.subspan(b, e - b);
}

InequalityRatio finish(double lhs, double lhs_hi, double rhs) {
  InequalityRatio r;
  r.lhs = lhs;
  r.lhs_hi = lhs_hi;
  r.rhs = rhs;
  if (rhs > 0) {
    r.ratio = lhs / rhs;
    r.ratio_hi = lhs_hi / rhs;
  }
  return r;
}

InequalityRatio windowed_power_sum(const WeightSequence& a, std::span<const double> u_in,
                                   double q) {
  if (a.s < q + 1 - 1e-12) throw std::invalid_argument("weights must satisfy Σ_{h≥N} a_h = O(N^-q)");
  const auto u = trim(u_in);
  if (u.empty()) return {};
  const auto L = static_cast<std::int64_t>(u.size());
  const double r = 2 * q - 2;

  std::vector<double> P(static_cast<std::size_t>(L) + 1, 0.0);
  long double sq = 0;
  for (std::int64_t i = 0; i < L; ++i) {
    P[i + 1] = P[i] + u[i];
    sq += static_cast<long double>(u[i]) * u[i];
  }
  const double U = P[L];

  long double lhs = 0;
  for (std::int64_t h = 0; h + 1 < L; ++h) {
    long double row = 0;
    for (std::int64_t n = -h; n <= L - 1 + h; ++n) {
      const std::int64_t lo = std::max<std::int64_t>(0, n - h);
      const std::int64_t hi = std::min<std::int64_t>(L - 1, n + h);
      row += abs_pow(P[hi + 1] - P[lo], r);
    }
    lhs += a(h) * row;
  }
  // h ≥ L-1: (2h - L + 2) full windows plus the h-independent partial ones.
  long double E = 0;
  for (std::int64_t j = 0; j + 1 < L; ++j) E += abs_pow(P[j + 1], r);
  for (std::int64_t j = 1; j < L; ++j) E += abs_pow(U - P[j], r);
  const double Ur = abs_pow(U, r);
  const std::int64_t Hc = std::max<std::int64_t>(L - 1, static_cast<std::int64_t>(a.head.size()));
  for (std::int64_t h = L - 1; h < Hc; ++h)
    lhs += a(h) * (static_cast<long double>(2 * h - L + 2) * Ur + E);

  const auto [lo1, hi1] = a.moment_tail(Hc, 1.0);
  const auto [lo0, hi0] = a.moment_tail(Hc, 0.0);
  const double c0 = static_cast<double>(E) - static_cast<double>(L) * Ur;
  double tail_lo = 2 * Ur * lo1, tail_hi = 2 * Ur * hi1;
  if (c0 >= 0) {
    tail_lo += c0 * lo0;
    tail_hi += c0 * hi0;
  } else {
    tail_lo += c0 * hi0;
    tail_hi += c0 * lo0;
  }
  const double base = static_cast<double>(lhs);
  return finish(base + tail_lo, base + tail_hi, std::pow(static_cast<double>(sq), q - 1));
}

}  // namespace

InequalityRatio check_ineq_q_gt_2(const WeightSequence& a, std::span<const double> u, double q) {
  if (!(q > 2)) throw std::invalid_argument("inequality needs q > 2 (it fails at q = 2)");
  return windowed_power_sum(a, u, q);
}

InequalityRatio probe_ineq_q_eq_2(const WeightSequence& a, std::span<const double> u) {
  return windowed_power_sum(a, u, 2.0);
}

InequalityRatio check_ineq_q_lt_2(const WeightSequence& a, std::span<const double> u_in,
                                  double q, double eps, std::size_t pad) {
  if (!(q > 1)) throw std::invalid_argument("inequality needs q > 1");
  if (!(eps > 0)) throw std::invalid_argument("inequality needs eps > 0");
  if (a.s < q + 1 - 1e-12) throw std::invalid_argument("weights must satisfy Σ_{h≥N} a_h = O(N^-q)");
  const auto u = trim(u_in);
  if (u.empty()) return {};
  const auto L = static_cast<std::int64_t>(u.size());
  const auto P = static_cast<std::int64_t>(pad ? pad : std::max<std::size_t>(u.size(), 256));
  const std::int64_t Nn = L + 2 * P;
  const std::int64_t reach = L - 1 + P;

  std::vector<double> g0(static_cast<std::size_t>(reach) + 1), g1(g0.size());
  for (std::int64_t m = 0; m <= reach; ++m) {
    const double me = std::pow(static_cast<double>(m), eps);
    g0[m] = 1.0 / (1.0 + me);
    g1[m] = 1.0 / (1.0 + me * static_cast<double>(m));
  }
  // Near/far threshold per h: k_h(m) = g0(m) iff m < M_h.
  std::vector<std::int64_t> M;
  for (std::int64_t h = 0;; ++h) {
    std::int64_t m = M.empty() ? 0 : M.back();
    while (m <= reach) {
      const double me = std::pow(static_cast<double>(m), eps);
      if (1.0 + me * static_cast<double>(m) >= static_cast<double>(h + 1) * (1.0 + me)) break;
      ++m;
    }
    M.push_back(m);
    if (m > reach) break;
  }
  const auto h_end = static_cast<std::int64_t>(M.size());

  // suffix sums Σ_{h ≥ k} a_h for k ≤ h_end
  const std::int64_t Hs = std::max<std::int64_t>(h_end + 1, static_cast<std::int64_t>(a.head.size()));
  const auto [tail_lo0, tail_hi0] = a.moment_tail(Hs, 0.0);
  std::vector<long double> suffix(static_cast<std::size_t>(Hs) + 1, 0);
  for (std::int64_t h = Hs - 1; h >= 0; --h) suffix[h] = suffix[h + 1] + a(h);

  std::vector<double> Ftot(static_cast<std::size_t>(Nn), 0.0), nearv(Ftot.size(), 0.0),
      G(Ftot.size(), 0.0);
  std::vector<std::int64_t> far_dist(Ftot.size());
  for (std::int64_t j = 0; j < Nn; ++j) {
    const std::int64_t n = j - P;
    long double acc = 0;
    for (std::int64_t i = 0; i < L; ++i) acc += u[i] * g1[std::abs(n - i)];
    Ftot[j] = static_cast<double>(acc);
    far_dist[j] = std::max(std::abs(n), std::abs(n - (L - 1)));
  }

  auto add_ring = [&](std::int64_t j, std::int64_t m) {
    const std::int64_t n = j - P;
    auto add = [&](std::int64_t i) {
      if (i >= 0 && i < L) {
        nearv[j] += u[i] * g0[m];
        G[j] += u[i] * g1[m];
      }
    };
    add(n - m);
    if (m > 0) add(n + m);
  };

  std::vector<std::int64_t> active(static_cast<std::size_t>(Nn));
  for (std::int64_t j = 0; j < Nn; ++j) active[j] = j;
  long double lhs = 0, frozen_lo = 0, frozen_hi = 0;
  std::int64_t Mprev = 0;
  for (std::int64_t h = 0; !active.empty(); ++h) {
    const std::int64_t Mh = h < h_end ? M[h] : reach + 1;
    const double ah = a(h);
    long double row = 0;
    std::size_t keep = 0;
    for (const std::int64_t j : active) {
      for (std::int64_t m = Mprev; m < std::min(Mh, far_dist[j] + 1); ++m) add_ring(j, m);
      if (Mh > far_dist[j]) {
        // Whole support inside the near zone from here on.
        const double w = abs_pow(nearv[j], q);
        const long double s_in = h < Hs ? suffix[h] : 0.0L;
        frozen_lo += w * (s_in + tail_lo0);
        frozen_hi += w * (s_in + tail_hi0);
        continue;
      }
      const double v = nearv[j] + static_cast<double>(h + 1) * (Ftot[j] - G[j]);
      row += abs_pow(v, q);
      active[keep++] = j;
    }
    active.resize(keep);
    lhs += ah * row;
    Mprev = Mh;
  }

  // Windows beyond the padding: |v| ≤ ‖u‖_1 (h+1)^θ d^-(θ+ε).
  const double theta = eps >= 1.0 / q ? 0.5 : 0.5 * (1.0 + 1.0 / q - eps);
  const double kappa = q * (theta + eps);
  const double A_theta = a.moment_tail(0, q * theta).second;
  double l1 = 0, lq = 0;
  for (double x : u) {
    l1 += std::fabs(x);
    lq += abs_pow(x, q);
  }
  const double outside = std::pow(l1, q) * A_theta * 2.0 *
                         std::pow(static_cast<double>(P), 1.0 - kappa) / (kappa - 1.0);
  const double base = static_cast<double>(lhs);
  return finish(base + static_cast<double>(frozen_lo),
                base + static_cast<double>(frozen_hi) + outside, lq);
}

PowerCheck stable_power_check(std::span<const double> c, std::span<const double> u, double p) {
  if (!(p >= 1)) throw std::invalid_argument("stable power inequality needs p >= 1");
  if (c.size() != u.size()) throw std::invalid_argument("c and u must have equal length");
  long double sc = 0, scu = 0, scup = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < 0) throw std::invalid_argument("c must be nonnegative");
    sc += c[i];
    scu += static_cast<long double>(c[i]) * u[i];
    scup += c[i] * abs_pow(u[i], p);
  }
  PowerCheck out;
  out.lhs = abs_pow(static_cast<double>(scu), p);
  out.rhs = std::pow(static_cast<double>(sc), p - 1) * static_cast<double>(scup);
  out.holds = out.lhs <= out.rhs + 1e-12 * std::max(1.0, out.rhs);
  return out;
}

}  // namespace towerstat
