#pragma once

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pairassoc/dataset.hpp"

namespace pairassoc {

/// Within-cluster resampling weight families.
///
///   None  1
///   CW    1 / n_i
///   PPW   1 / n_iP                 (the constant 1/N_P cancels and is dropped)
///   OPW   1 / (N_iP n_iP)
///   MOPW  1 / (N_iK N_iL n_iP)
enum class WeightScheme { kNone, kCW, kPPW, kOPW, kMOPW };

inline constexpr WeightScheme kAllSchemes[] = {WeightScheme::kNone, WeightScheme::kCW,
                                               WeightScheme::kPPW, WeightScheme::kOPW,
                                               WeightScheme::kMOPW};

std::string_view to_string(WeightScheme scheme);
/// Accepts none, cw, ppw, opw, mopw (any case). Throws ValidationError otherwise.
WeightScheme parse_weight_scheme(std::string_view text);

/// PPW, OPW and MOPW need category counts; None and CW do not.
constexpr bool requires_categories(WeightScheme s) {
  return s == WeightScheme::kPPW || s == WeightScheme::kOPW || s == WeightScheme::kMOPW;
}

/// Per-unit weights aligned with the dataset's flat unit order.
struct WeightVector {
  WeightScheme scheme = WeightScheme::kNone;
  std::vector<double> values;
};

WeightVector compute_weights(const CategorizedDataset& data, WeightScheme scheme);

/// None and CW only; throws ValidationError for the category-based schemes.
WeightVector compute_weights(const ClusteredDataset& data, WeightScheme scheme);

/// Memoizes weight vectors per (dataset, categorizer, scheme). None and CW are
/// shared across categorizers of the same dataset. Not thread-safe.
class WeightCache {
 public:
  const WeightVector& get(const CategorizedDataset& data, WeightScheme scheme);
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  using Key = std::tuple<const ClusteredDataset*, std::string, int>;
  std::map<Key, WeightVector> entries_;
};

}  // namespace pairassoc
