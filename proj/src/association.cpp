#include "pairassoc/association.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "pairassoc/errors.hpp"
#include "pairassoc/normal.hpp"

namespace pairassoc {

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::kPearson: return "pearson";
    case Measure::kSpearman: return "spearman";
    case Measure::kPhi: return "phi";
  }
  return "?";
}

Measure parse_measure(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Measure m : kAllMeasures) {
    if (lower == to_string(m)) return m;
  }
  throw ValidationError("unknown measure '" + std::string(text) +
                        "' (expected pearson, spearman or phi)");
}

namespace {

// Eligible units of `data` gathered into working pairs, with their weights.
struct EligibleSample {
  WorkingPairs pairs;
  std::vector<double> weights;
};

EligibleSample gather(const ClusteredDataset& data, const WeightVector& weights,
                      const EstimatorOptions& options) {
  if (weights.values.size() != data.unit_count()) {
    throw ValidationError("weight vector does not match the dataset's units");
  }
  EligibleSample out;
  out.pairs.a.reserve(data.unit_count());
  out.pairs.b.reserve(data.unit_count());
  out.weights.reserve(data.unit_count());
  const auto x = data.x();
  const auto y = data.y();
  for (std::size_t c = 0; c < data.cluster_count(); ++c) {
    if (data.cluster_size(c) < options.min_cluster_size) continue;
    for (std::size_t u = data.cluster_begin(c); u < data.cluster_end(c); ++u) {
      const double w = weights.values[u];
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ValidationError("weights must be positive and finite");
      }
      out.pairs.a.push_back(x[u]);
      out.pairs.b.push_back(y[u]);
      out.weights.push_back(w);
    }
    out.pairs.cluster_offsets.push_back(out.pairs.a.size());
  }
  if (out.pairs.cluster_count() == 0) {
    throw ComputationError("no cluster has at least " +
                           std::to_string(options.min_cluster_size) + " units");
  }
  return out;
}

AssociationEstimate finish(Measure measure, WeightScheme scheme, double rho,
                           const MomentEstimate& est) {
  AssociationEstimate out;
  out.measure = measure;
  out.scheme = scheme;
  out.rho_hat = rho;
  out.se = delta_se(est.moments, est.covariance);
  out.ci_low = rho - kZ975 * out.se;
  out.ci_high = rho + kZ975 * out.se;
  out.n_clusters_used = est.clusters;
  out.n_units_used = est.units;
  return out;
}

// Rescales one margin to weighted mean 0 and variance 1. The correlation and its
// delta-method SE are invariant to fixed affine maps of either margin, and the
// standardized moments avoid cancellation in the sandwich.
void standardize(std::vector<double>& v, std::span<const double> w) {
  double total = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += w[i];
    mean += w[i] * v[i];
  }
  mean /= total;
  double var = 0.0, raw = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    var += w[i] * (v[i] - mean) * (v[i] - mean);
    raw += w[i] * v[i] * v[i];
  }
  if (!(var > 1e-12 * raw)) {
    throw DegenerateVarianceError("a margin is constant over the eligible units");
  }
  const double sd = std::sqrt(var / total);
  for (double& x : v) x = (x - mean) / sd;
}

MomentEstimate standardized_moments(WorkingPairs pairs, std::span<const double> weights) {
  standardize(pairs.a, weights);
  standardize(pairs.b, weights);
  return weighted_moments(pairs, weights);
}

AssociationEstimate run_pearson(Measure measure, WeightScheme scheme, const WorkingPairs& pairs,
                                std::span<const double> weights) {
  const MomentEstimate est = standardized_moments(pairs, weights);
  return finish(measure, scheme, correlation_functional(est.moments), est);
}

}  // namespace

std::vector<double> weighted_midranks(std::span<const double> values,
                                      std::span<const double> weights) {
  const std::size_t n = values.size();
  if (weights.size() != n) throw ValidationError("weighted_midranks: size mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  double total = 0.0;
  for (double w : weights) total += w;

  std::vector<double> ranks(n);
  double below = 0.0;
  std::size_t run = 0;
  while (run < n) {
    std::size_t end = run;
    double tied = 0.0;
    while (end < n && values[order[end]] == values[order[run]]) tied += weights[order[end++]];
    const double midrank = (below + 0.5 * tied) / total;
    for (std::size_t r = run; r < end; ++r) ranks[order[r]] = midrank;
    below += tied;
    run = end;
  }
  return ranks;
}

double phi_from_cells(const CellTable& p) {
  const double row1 = p[1][1] + p[1][0];
  const double row0 = p[0][1] + p[0][0];
  const double col1 = p[1][1] + p[0][1];
  const double col0 = p[1][0] + p[0][0];
  if (!(row1 > 0.0 && row0 > 0.0 && col1 > 0.0 && col0 > 0.0)) {
    throw DegenerateVarianceError("a dichotomized margin contains only one level");
  }
  return (p[1][1] * p[0][0] - p[1][0] * p[0][1]) / std::sqrt(row1 * row0 * col1 * col0);
}

AssociationEstimate pearson(const ClusteredDataset& data, const WeightVector& weights,
                            const EstimatorOptions& options) {
  const EligibleSample s = gather(data, weights, options);
  return run_pearson(Measure::kPearson, weights.scheme, s.pairs, s.weights);
}

AssociationEstimate spearman(const ClusteredDataset& data, const WeightVector& weights,
                             const EstimatorOptions& options) {
  EligibleSample s = gather(data, weights, options);
  s.pairs.a = weighted_midranks(s.pairs.a, s.weights);
  s.pairs.b = weighted_midranks(s.pairs.b, s.weights);
  return run_pearson(Measure::kSpearman, weights.scheme, s.pairs, s.weights);
}

AssociationEstimate phi(const ClusteredDataset& data, const WeightVector& weights,
                        double x_threshold, double y_threshold,
                        const EstimatorOptions& options) {
  EligibleSample s = gather(data, weights, options);
  CellTable cells{};
  double total = 0.0;
  for (std::size_t u = 0; u < s.weights.size(); ++u) {
    const int k = s.pairs.a[u] >= x_threshold ? 1 : 0;
    const int l = s.pairs.b[u] >= y_threshold ? 1 : 0;
    s.pairs.a[u] = k;
    s.pairs.b[u] = l;
    cells[k][l] += s.weights[u];
    total += s.weights[u];
  }
  for (auto& row : cells) {
    for (double& cell : row) cell /= total;
  }
  const double value = phi_from_cells(cells);
  const MomentEstimate est = standardized_moments(std::move(s.pairs), s.weights);
  return finish(Measure::kPhi, weights.scheme, value, est);
}

AssociationEstimate pearson(const CategorizedDataset& data, WeightScheme scheme,
                            const EstimatorOptions& options) {
  return pearson(data.data(), compute_weights(data, scheme), options);
}

AssociationEstimate pearson(const ClusteredDataset& data, WeightScheme scheme,
                            const EstimatorOptions& options) {
  return pearson(data, compute_weights(data, scheme), options);
}

AssociationEstimate spearman(const CategorizedDataset& data, WeightScheme scheme,
                             const EstimatorOptions& options) {
  return spearman(data.data(), compute_weights(data, scheme), options);
}

AssociationEstimate spearman(const ClusteredDataset& data, WeightScheme scheme,
                             const EstimatorOptions& options) {
  return spearman(data, compute_weights(data, scheme), options);
}

AssociationEstimate phi(const CategorizedDataset& data, WeightScheme scheme, double x_threshold,
                        double y_threshold, const EstimatorOptions& options) {
  return phi(data.data(), compute_weights(data, scheme), x_threshold, y_threshold, options);
}

AssociationEstimate phi(const ClusteredDataset& data, WeightScheme scheme, double x_threshold,
                        double y_threshold, const EstimatorOptions& options) {
  return phi(data, compute_weights(data, scheme), x_threshold, y_threshold, options);
}

}  // namespace pairassoc
