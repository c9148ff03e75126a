#include <cmath>
#include <stdexcept>

#include "towerstat/lsv.hpp"

namespace towerstat {

namespace {
constexpr double kExtendedBelow = 1e-8;

// The map and its return times stay well defined at γ = 1, where μ is infinite.
void validate_map(const LsvParams& params) {
  if (!(params.gamma > 0.0 && params.gamma <= 1.0))
    throw std::invalid_argument("LSV parameter gamma must lie in (0,1]");
}
}  // namespace

void validate(const LsvParams& params) {
  if (!(params.gamma > 0.0 && params.gamma < 1.0))
    throw std::invalid_argument("LSV parameter gamma must lie in (0,1)");
}

double lsv_map(double x, const LsvParams& params) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("LSV map needs x in [0,1]");
  if (x >= 0.5) return 2.0 * x - 1.0;
  const double y = x * (1.0 + std::pow(2.0 * x, params.gamma));
  return y > 1.0 ? 1.0 : y;
}

long double lsv_map(long double x, const LsvParams& params) {
  if (!(x >= 0.0L && x <= 1.0L)) throw std::domain_error("LSV map needs x in [0,1]");
  if (x >= 0.5L) return 2.0L * x - 1.0L;
  const long double y = x * (1.0L + std::pow(2.0L * x, static_cast<long double>(params.gamma)));
  return y > 1.0L ? 1.0L : y;
}

std::optional<LsvReturn> lsv_first_return(double x, const LsvParams& params,
                                          std::int64_t cap) {
  validate_map(params);
  if (!(x >= 0.5 && x <= 1.0))
    throw std::domain_error("return time needs x in [1/2,1]");
  const long double g = params.gamma;
  double y = 2.0 * x - 1.0;
  std::int64_t i = 1;
  while (y < 0.5) {
    if (i >= cap) return std::nullopt;
    if (params.precision == LsvPrecision::Extended && y < kExtendedBelow) {
      long double z = y;
      while (z < static_cast<long double>(kExtendedBelow)) {
        if (i >= cap) return std::nullopt;
        const long double next = z * (1.0L + std::pow(2.0L * z, g));
        if (next == z) return std::nullopt;  // stuck at the fixed point
        z = next;
        ++i;
      }
      y = static_cast<double>(z);
      continue;
    }
    const double next = y * (1.0 + std::pow(2.0 * y, params.gamma));
    if (next == y) return std::nullopt;
    y = next;
    ++i;
  }
  return LsvReturn{i, y > 1.0 ? 1.0 : y};
}

std::optional<std::int64_t> lsv_return_time(double x, const LsvParams& params,
                                            std::int64_t cap) {
  auto r = lsv_first_return(x, params, cap);
  if (!r) return std::nullopt;
  return r->steps;
}

}  // namespace towerstat
