#pragma once

namespace pairassoc {

/// Standard normal distribution function. Saturates to 0/1 for extreme arguments.
double normal_cdf(double z);

/// Standard normal upper tail 1 - normal_cdf(z), without cancellation for large z.
double normal_sf(double z);

/// Inverse of normal_cdf on (0, 1) using Wichura's AS 241 rational approximations
/// (relative accuracy about 1e-16). Throws ValidationError outside the open interval.
double normal_quantile(double p);

/// 1 / (1 + exp(-t)), evaluated without overflow for large |t|.
double logistic(double t);

/// Two-sided 95% normal critical value, normal_quantile(0.975).
inline constexpr double kZ975 = 1.959963984540054;

}  // namespace pairassoc
