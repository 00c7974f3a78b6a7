#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairassoc/association.hpp"
#include "pairassoc/dataset.hpp"
#include "pairassoc/random_stream.hpp"
#include "pairassoc/weights.hpp"

namespace pairassoc {

/// Latent Gaussian model for clustered pairs with outcome-dependent retention.
///
///   (U_i, V_i) ~ N2((mu_u, mu_v), sd (sigma_u, sigma_v), corr rho_uv)
///   X_ij = alpha_x + beta_x U_i + e_xij,  Y_ij = alpha_y + beta_y V_i + e_yij
///   (e_x, e_y) ~ N2(0, sd (sigma_x, sigma_y), corr rho_xy)
///   R_ij ~ Bernoulli(min(logistic(eta_0 + eta_x x), logistic(eta_0 + eta_y y)))
///
/// Defaults are the fixed values of the reference design; the varied factors
/// default to their null levels and M to 100.
struct SimulationConfig {
  std::size_t M = 100;
  double mu_u = 0.0, mu_v = 0.0;
  double sigma_u = 1.0, sigma_v = 1.0;
  double rho_uv = 0.0;
  double alpha_x = 0.0, alpha_y = 0.0;
  double beta_x = 1.0, beta_y = 1.0;
  double sigma_x = 0.5, sigma_y = 0.5;
  double rho_xy = 0.0;
  int N_K = 5, N_L = 5;
  double eta_0 = 3.0, eta_x = 0.0, eta_y = 0.0;
  std::size_t n_max = 100;
  std::size_t n_min = 2;
  std::size_t Q = 10000;
  std::uint64_t seed = 20240601;

  /// Throws ValidationError on any violated invariant.
  void validate() const;

  /// Hash of every field except Q and seed; names the setting's random streams
  /// so that changing Q only appends or removes replicates.
  std::uint64_t setting_hash() const;

  /// Location and scale used to standardize each margin.
  double x_center() const { return alpha_x + beta_x * mu_u; }
  double y_center() const { return alpha_y + beta_y * mu_v; }
  double x_scale() const;
  double y_scale() const;
};

/// All 32 combinations of M in {20, 100}, rho_xy, rho_uv in {0, 0.5} and
/// eta_x, eta_y in {0, 4}, with every other field taken from `base`.
std::vector<SimulationConfig> expand_grid(const SimulationConfig& base);

/// Cut points Phi^-1(h / N), h = 1..N-1.
std::vector<double> quantile_cuts(int levels);

struct GeneratedCluster {
  double u = 0.0;
  double v = 0.0;
  std::vector<double> x, y;
  std::vector<double> x_std, y_std;
  std::vector<int> k, l;
  std::vector<unsigned char> retained;
  std::size_t n_obs = 0;
};

GeneratedCluster generate_cluster(const SimulationConfig& cfg, RandomStream& stream);

double retention_probability(double x, double y, const SimulationConfig& cfg);

/// Complete-data marginal correlation of (X, Y).
double rho_true(const SimulationConfig& cfg);

/// Streaming unweighted Pearson correlation; merges are exact up to rounding.
class PearsonAccumulator {
 public:
  void add(double x, double y);
  void merge(const PearsonAccumulator& other);
  std::size_t count() const noexcept { return n_; }
  double mean_x() const noexcept { return mean_x_; }
  double mean_y() const noexcept { return mean_y_; }
  /// Throws DegenerateVarianceError with fewer than two units or a constant margin.
  double correlation() const;

 private:
  std::size_t n_ = 0;
  double mean_x_ = 0.0, mean_y_ = 0.0;
  double sxx_ = 0.0, syy_ = 0.0, sxy_ = 0.0;
};

/// One Monte Carlo replicate after retention and the n_min filter.
struct Replicate {
  /// Retained units of eligible clusters; null when no cluster is eligible.
  std::shared_ptr<const ClusteredDataset> data;
  /// Severity categories of the retained units, aligned with `data`.
  std::vector<int> k, l;
  /// The same clusters with (k, l) in place of (x, y).
  std::shared_ptr<const ClusteredDataset> severity;
  std::size_t clusters_generated = 0;
  std::size_t units_generated = 0;
};

/// Replicate `index` of the setting. Cluster c draws from the stream
/// (seed, {setting_hash, index, c}).
Replicate generate_replicate(const SimulationConfig& cfg, std::size_t index);

/// Estimate of `measure` on a replicate with weights from its severity
/// categories. Pearson uses the continuous outcomes, Spearman ranks the ordinal
/// severity categories, and Phi dichotomizes each continuous margin at its
/// population median.
AssociationEstimate estimate_replicate(const Replicate& rep, const SimulationConfig& cfg,
                                       Measure measure, WeightScheme scheme,
                                       const WeightVector& weights);

/// Pooled unweighted Pearson correlation over the retained units of eligible
/// clusters in all replicates.
double rho_obs_pooled(std::span<const Replicate> replicates);

struct EstimatorSummary {
  Measure measure = Measure::kPearson;
  WeightScheme scheme = WeightScheme::kCW;
  double mean_estimate = 0.0;
  /// Monte Carlo standard deviation of the estimates across replicates.
  double sd_estimate = 0.0;
  double mean_se = 0.0;
  double coverage_true = 0.0;
  double coverage_obs = 0.0;
  std::size_t replicates_used = 0;
  std::size_t replicates_dropped = 0;
};

struct ObservedTarget {
  Measure measure = Measure::kPearson;
  double value = 0.0;
};

struct SettingSummary {
  SimulationConfig config;
  double rho_true = 0.0;
  /// Pooled unweighted Pearson correlation of the retained data.
  double rho_obs = 0.0;
  /// Pooled unweighted value of each requested measure on the retained data,
  /// computed on the same working values as the estimator; the observed-data
  /// target for that measure's coverage.
  std::vector<ObservedTarget> rho_obs_by_measure;
  std::vector<EstimatorSummary> estimators;
  std::size_t replicates = 0;
  /// Replicates with no eligible cluster.
  std::size_t empty_replicates = 0;
  double mean_eligible_clusters = 0.0;

  double observed_target(Measure measure) const;
  const EstimatorSummary& find(Measure measure, WeightScheme scheme) const;
};

/// Runs Q replicates and summarizes every (measure, scheme) pair. Replicates
/// where an estimator fails are dropped from that estimator's summary and
/// counted; ComputationError if an estimator fails in every replicate. The
/// result does not depend on `threads` (0 = all cores).
SettingSummary run_setting(const SimulationConfig& cfg, std::span<const Measure> measures,
                           std::span<const WeightScheme> schemes, unsigned threads = 0);

/// Grouping of N ordinal severity levels used to derive weighting categories:
/// either a contiguous dichotomization 1..cut | cut+1..N or all N levels.
struct SeveritySplit {
  /// 0 keeps every level ("Severity").
  int cut = 0;

  bool keeps_all() const noexcept { return cut == 0; }
  int apply(int category) const noexcept {
    return keeps_all() ? category : (category <= cut ? 1 : 2);
  }
  /// "1-2|3-5" style label, or "Severity".
  std::string label(int levels) const;

  /// Parses a label (also accepting a bare cut such as "2"). Throws ValidationError.
  static SeveritySplit parse(std::string_view text, int levels);
  /// Every dichotomization in order of increasing cut, then "Severity".
  static std::vector<SeveritySplit> all(int levels);
};

struct SweepCell {
  std::string x_split;
  std::string y_split;
  WeightScheme scheme = WeightScheme::kCW;
  double mean_abs_bias = 0.0;
  double mc_se = 0.0;
  std::size_t replicates_used = 0;
  /// No replicate produced an estimate for this cell.
  bool missing = false;
};

/// Mean |rho_hat - rho_true| over Q replicates for every (x_split, y_split,
/// scheme). Splits change only the categories that drive the weights; the
/// measure is computed on the same data throughout.
std::vector<SweepCell> dichotomization_sweep(const SimulationConfig& cfg, Measure measure,
                                             std::span<const WeightScheme> schemes,
                                             std::span<const SeveritySplit> x_splits,
                                             std::span<const SeveritySplit> y_splits,
                                             unsigned threads = 0);

}  // namespace pairassoc
