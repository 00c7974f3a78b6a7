#include "pairassoc/moments.hpp"

#include <cmath>

#include "pairassoc/errors.hpp"

namespace pairassoc {

namespace {

struct Centered {
  double cov;
  double var_a;
  double var_b;
};

Centered centered_parts(const MomentVector& m) {
  const double var_a = m.m20 - m.m10 * m.m10;
  const double var_b = m.m02 - m.m01 * m.m01;
  if (!(var_a > 1e-12 * std::fabs(m.m20)) || !(var_a > 0.0)) {
    throw DegenerateVarianceError("first margin has no variance");
  }
  if (!(var_b > 1e-12 * std::fabs(m.m02)) || !(var_b > 0.0)) {
    throw DegenerateVarianceError("second margin has no variance");
  }
  return {m.m11 - m.m10 * m.m01, var_a, var_b};
}

}  // namespace

MomentEstimate weighted_moments(const WorkingPairs& pairs, std::span<const double> weights) {
  const std::size_t units = pairs.a.size();
  if (units == 0) throw ValidationError("weighted_moments: no units");
  if (pairs.b.size() != units || weights.size() != units ||
      pairs.cluster_offsets.empty() || pairs.cluster_offsets.back() != units) {
    throw ValidationError("weighted_moments: inputs are not aligned");
  }

  double total = 0.0;
  std::array<double, 5> sums{};
  for (std::size_t u = 0; u < units; ++u) {
    const double w = weights[u];
    const double a = pairs.a[u];
    const double b = pairs.b[u];
    total += w;
    sums[0] += w * a;
    sums[1] += w * b;
    sums[2] += w * a * b;
    sums[3] += w * a * a;
    sums[4] += w * b * b;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ValidationError("weighted_moments: total weight must be positive");
  }

  MomentEstimate out;
  std::array<double, 5> m{};
  for (int k = 0; k < 5; ++k) m[k] = sums[k] / total;
  out.moments = MomentVector::from_array(m);
  out.total_weight = total;
  out.units = units;
  out.clusters = pairs.cluster_count();

  Matrix5 meat{};
  for (std::size_t c = 0; c < pairs.cluster_count(); ++c) {
    std::array<double, 5> score{};
    for (std::size_t u = pairs.cluster_offsets[c]; u < pairs.cluster_offsets[c + 1]; ++u) {
      const double w = weights[u];
      const double a = pairs.a[u];
      const double b = pairs.b[u];
      score[0] += w * (a - m[0]);
      score[1] += w * (b - m[1]);
      score[2] += w * (a * b - m[2]);
      score[3] += w * (a * a - m[3]);
      score[4] += w * (b * b - m[4]);
    }
    for (int r = 0; r < 5; ++r) {
      for (int s = 0; s < 5; ++s) meat[r][s] += score[r] * score[s];
    }
  }
  const double scale = 1.0 / (total * total);
  for (int r = 0; r < 5; ++r) {
    for (int s = 0; s < 5; ++s) out.covariance[r][s] = meat[r][s] * scale;
  }
  return out;
}

double correlation_functional(const MomentVector& m) {
  const Centered c = centered_parts(m);
  const double rho = c.cov / std::sqrt(c.var_a * c.var_b);
  if (std::fabs(rho) > 1.0) {
    if (std::fabs(rho) - 1.0 >= 1e-9) {
      throw ComputationError("correlation functional outside [-1, 1]");
    }
    return rho > 0.0 ? 1.0 : -1.0;
  }
  return rho;
}

std::array<double, 5> correlation_gradient(const MomentVector& m) {
  const Centered c = centered_parts(m);
  const double denom = std::sqrt(c.var_a * c.var_b);
  const double g = c.cov / denom;
  return {
      -m.m01 / denom + g * m.m10 / c.var_a,
      -m.m10 / denom + g * m.m01 / c.var_b,
      1.0 / denom,
      -g / (2.0 * c.var_a),
      -g / (2.0 * c.var_b),
  };
}

double delta_se(const MomentVector& m, const Matrix5& covariance) {
  const auto grad = correlation_gradient(m);
  double var = 0.0;
  for (int r = 0; r < 5; ++r) {
    for (int s = 0; s < 5; ++s) var += grad[r] * covariance[r][s] * grad[s];
  }
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace pairassoc
