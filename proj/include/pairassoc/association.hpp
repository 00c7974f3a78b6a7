#pragma once

#include <cstddef>
#include <string_view>

#include "pairassoc/dataset.hpp"
#include "pairassoc/moments.hpp"
#include "pairassoc/weights.hpp"

namespace pairassoc {

enum class Measure { kPearson, kSpearman, kPhi };

inline constexpr Measure kAllMeasures[] = {Measure::kPearson, Measure::kSpearman,
                                           Measure::kPhi};

std::string_view to_string(Measure measure);
Measure parse_measure(std::string_view text);

struct EstimatorOptions {
  /// Clusters with fewer units do not contribute to any sum.
  std::size_t min_cluster_size = 2;
};

/// Point estimate with its sandwich/delta-method standard error and the Wald
/// interval rho_hat -/+ z_0.975 se.
struct AssociationEstimate {
  Measure measure = Measure::kPearson;
  WeightScheme scheme = WeightScheme::kNone;
  double rho_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_clusters_used = 0;
  std::size_t n_units_used = 0;
};

// Each measure has three entry points: precomputed weights, a categorized dataset
// plus a scheme, or a plain dataset with a size-only scheme (None or CW).
// All throw ComputationError (or DegenerateVarianceError) when the estimate is
// undefined, e.g. no eligible cluster or a constant margin.

AssociationEstimate pearson(const ClusteredDataset& data, const WeightVector& weights,
                            const EstimatorOptions& options = {});
AssociationEstimate pearson(const CategorizedDataset& data, WeightScheme scheme,
                            const EstimatorOptions& options = {});
AssociationEstimate pearson(const ClusteredDataset& data, WeightScheme scheme,
                            const EstimatorOptions& options = {});

/// Pearson correlation of pooled weighted midranks. The midrank of a value v is
/// (F(v) + F(v-)) / 2 under the weighted ECDF of the eligible units; the ranks
/// are then treated as fixed data in the moment sandwich.
AssociationEstimate spearman(const ClusteredDataset& data, const WeightVector& weights,
                             const EstimatorOptions& options = {});
AssociationEstimate spearman(const CategorizedDataset& data, WeightScheme scheme,
                             const EstimatorOptions& options = {});
AssociationEstimate spearman(const ClusteredDataset& data, WeightScheme scheme,
                             const EstimatorOptions& options = {});

/// Phi coefficient of the indicators I(x >= x_threshold), I(y >= y_threshold),
/// from weighted cell probabilities. The standard error comes from the Pearson
/// pipeline on the same indicators, which has the identical point estimate.
AssociationEstimate phi(const ClusteredDataset& data, const WeightVector& weights,
                        double x_threshold, double y_threshold,
                        const EstimatorOptions& options = {});
AssociationEstimate phi(const CategorizedDataset& data, WeightScheme scheme, double x_threshold,
                        double y_threshold, const EstimatorOptions& options = {});
AssociationEstimate phi(const ClusteredDataset& data, WeightScheme scheme, double x_threshold,
                        double y_threshold, const EstimatorOptions& options = {});

/// Weighted midranks of `values` under `weights` (both over the same units).
std::vector<double> weighted_midranks(std::span<const double> values,
                                      std::span<const double> weights);

/// Weighted 2x2 cell probabilities pi_kl, indexed [k][l] with k, l in {0, 1}.
using CellTable = std::array<std::array<double, 2>, 2>;

/// phi = (pi11 pi00 - pi10 pi01) / sqrt(pi1. pi0. pi.1 pi.0). Throws
/// DegenerateVarianceError if a marginal probability is 0 or 1.
double phi_from_cells(const CellTable& cells);

}  // namespace pairassoc
