#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pairassoc {

/// Input form of one cluster: an identifier and its paired unit outcomes.
struct Cluster {
  std::string id;
  std::vector<double> x;
  std::vector<double> y;
};

/// Clusters of paired continuous observations, stored flat in cluster order.
///
/// Invariants (checked on construction, ValidationError otherwise): cluster ids
/// are unique, every cluster has at least one unit, every value is finite.
/// Immutable after construction.
class ClusteredDataset {
 public:
  ClusteredDataset() = default;
  explicit ClusteredDataset(std::vector<Cluster> clusters);

  std::size_t cluster_count() const noexcept { return ids_.size(); }
  std::size_t unit_count() const noexcept { return x_.size(); }

  const std::string& id(std::size_t cluster) const { return ids_[cluster]; }
  std::size_t cluster_begin(std::size_t cluster) const { return offsets_[cluster]; }
  std::size_t cluster_end(std::size_t cluster) const { return offsets_[cluster + 1]; }
  std::size_t cluster_size(std::size_t cluster) const {
    return offsets_[cluster + 1] - offsets_[cluster];
  }

  /// Unit offsets, size cluster_count() + 1.
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> y() const noexcept { return y_; }

  std::span<const double> x(std::size_t cluster) const {
    return std::span<const double>(x_).subspan(cluster_begin(cluster), cluster_size(cluster));
  }
  std::span<const double> y(std::size_t cluster) const {
    return std::span<const double>(y_).subspan(cluster_begin(cluster), cluster_size(cluster));
  }

  /// Same units with the roles of x and y exchanged.
  ClusteredDataset swapped() const;

  /// Sub-dataset holding the listed clusters, in the listed order.
  ClusteredDataset select(std::span<const std::size_t> clusters) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Keeps clusters with at least n_min units, in their original order.
/// Throws ValidationError for n_min == 0 or when no cluster survives.
ClusteredDataset filter_min_cluster_size(const ClusteredDataset& data, std::size_t n_min);

/// Explicit per-unit category labels (positive integers) aligned with the units.
struct LabelRule {
  std::vector<int> labels;
};

/// Ordinal cut points t_1 < ... < t_{c-1}; a value v gets category h when
/// t_{h-1} <= v < t_h with t_0 = -inf and t_c = +inf.
struct ThresholdRule {
  std::vector<double> thresholds;
};

using MarginRule = std::variant<LabelRule, ThresholdRule>;

/// How each margin is mapped onto ordinal categories.
struct Categorizer {
  MarginRule x_rule;
  MarginRule y_rule;

  static Categorizer from_thresholds(std::vector<double> x_thresholds,
                                     std::vector<double> y_thresholds);
  static Categorizer from_labels(std::vector<int> x_labels, std::vector<int> y_labels);

  /// Stable textual identity; equal keys imply identical categorizations.
  std::string key() const;
};

/// Category of `value` under a threshold rule (1-based, left-closed intervals).
int threshold_category(std::span<const double> thresholds, double value);

/// A dataset with per-unit categories and the within-cluster counts that drive
/// the pair-based weights.
///
/// For unit j of cluster i: K_ij, L_ij, and the multiplicities n_iK, n_iL, n_iP
/// of its K category, L category and paired category within the cluster. For
/// cluster i: the numbers N_iK, N_iL, N_iP of distinct observed categories.
struct CategorizedDataset {
  std::shared_ptr<const ClusteredDataset> base;
  std::string categorizer_key;

  std::vector<int> k;
  std::vector<int> l;
  std::vector<int> n_k;
  std::vector<int> n_l;
  std::vector<int> n_p;

  std::vector<int> distinct_k;
  std::vector<int> distinct_l;
  std::vector<int> distinct_p;

  int levels_k = 0;
  int levels_l = 0;
  int levels_p() const noexcept { return levels_k * levels_l; }

  const ClusteredDataset& data() const noexcept { return *base; }
};

/// Applies the categorizer and computes every count. Throws ValidationError when a
/// label rule does not cover every unit, a label is not positive, or thresholds
/// are not strictly increasing and finite.
CategorizedDataset categorize(std::shared_ptr<const ClusteredDataset> data,
                              const Categorizer& categorizer);
CategorizedDataset categorize(const ClusteredDataset& data, const Categorizer& categorizer);

}  // namespace pairassoc
