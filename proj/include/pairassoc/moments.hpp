#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace pairassoc {

/// Weighted raw moments (m10, m01, m11, m20, m02) of a working pair (a, b).
struct MomentVector {
  double m10 = 0.0;
  double m01 = 0.0;
  double m11 = 0.0;
  double m20 = 0.0;
  double m02 = 0.0;

  std::array<double, 5> as_array() const { return {m10, m01, m11, m20, m02}; }
  static MomentVector from_array(const std::array<double, 5>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
};

using Matrix5 = std::array<std::array<double, 5>, 5>;

/// Working pairs grouped by cluster: units of cluster i occupy
/// [cluster_offsets[i], cluster_offsets[i+1]).
struct WorkingPairs {
  std::vector<std::size_t> cluster_offsets{0};
  std::vector<double> a;
  std::vector<double> b;

  std::size_t cluster_count() const { return cluster_offsets.size() - 1; }
};

struct MomentEstimate {
  MomentVector moments;
  /// Sandwich covariance of the moment estimator.
  Matrix5 covariance{};
  double total_weight = 0.0;
  std::size_t clusters = 0;
  std::size_t units = 0;
};

/// Ratio-form weighted moments and their stacked estimating-function sandwich covariance.
///
/// With U_ij the 5-vector of a^k b^l - m_kl and s_i = sum_j w_ij U_ij, the bread is
/// A = -(W/M) I and the meat B = (1/M) sum_i s_i s_i^T, so the covariance
/// A^-1 B A^-T / M reduces to sum_i s_i s_i^T / W^2 (W the total weight). It is
/// invariant to rescaling all weights. Throws ValidationError if there are no
/// units, weights are misaligned, or the total weight is not positive.
MomentEstimate weighted_moments(const WorkingPairs& pairs, std::span<const double> weights);

/// Pearson functional g(m) = (m11 - m10 m01) / sqrt((m20 - m10^2)(m02 - m01^2)).
///
/// Throws DegenerateVarianceError when a centered variance is below 1e-12 times
/// its raw second moment. Values that overshoot [-1, 1] by less than 1e-9 are
/// clamped; a larger overshoot throws ComputationError.
double correlation_functional(const MomentVector& m);

/// Analytic gradient of correlation_functional with respect to the five moments.
std::array<double, 5> correlation_gradient(const MomentVector& m);

/// Delta-method standard error sqrt(grad^T cov grad).
double delta_se(const MomentVector& m, const Matrix5& covariance);

}  // namespace pairassoc
