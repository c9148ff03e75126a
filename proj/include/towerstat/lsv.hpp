#pragma once

#include <cstdint>
#include <optional>

namespace towerstat {

enum class LsvPrecision {
  Standard,  // double throughout
  Extended   // long double while the orbit is below 1e-8
};

struct LsvParams {
  double gamma = 0.5;
  LsvPrecision precision = LsvPrecision::Extended;

  double tail_index() const { return 1.0 / gamma; }
};

/// γ ∈ (0,1), as needed for a finite invariant measure.
void validate(const LsvParams& params);

/// T(x) = x(1 + 2^γ x^γ) on [0,1/2), 2x - 1 on [1/2,1].
double lsv_map(double x, const LsvParams& params);
long double lsv_map(long double x, const LsvParams& params);

/// First return time of x ∈ [1/2,1] to [1/2,1]; nullopt when it exceeds cap.
/// Also accepts the boundary case γ = 1.
std::optional<std::int64_t> lsv_return_time(double x, const LsvParams& params,
                                             std::int64_t cap);

/// Point reached after the first return (the induced map), with its return time.
struct LsvReturn {
  std::int64_t steps = 0;
  double point = 0;
};
std::optional<LsvReturn> lsv_first_return(double x, const LsvParams& params,
                                          std::int64_t cap);

}  // namespace towerstat
