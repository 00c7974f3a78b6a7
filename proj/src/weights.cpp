#include "pairassoc/weights.hpp"

#include <algorithm>
#include <cctype>

#include "pairassoc/errors.hpp"

namespace pairassoc {

std::string_view to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::kNone: return "none";
    case WeightScheme::kCW: return "cw";
    case WeightScheme::kPPW: return "ppw";
    case WeightScheme::kOPW: return "opw";
    case WeightScheme::kMOPW: return "mopw";
  }
  return "?";
}

WeightScheme parse_weight_scheme(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (WeightScheme s : kAllSchemes) {
    if (lower == to_string(s)) return s;
  }
  throw ValidationError("unknown weight scheme '" + std::string(text) +
                        "' (expected none, cw, ppw, opw or mopw)");
}

namespace {

WeightVector size_only_weights(const ClusteredDataset& data, WeightScheme scheme) {
  WeightVector out{scheme, std::vector<double>(data.unit_count(), 1.0)};
  if (scheme == WeightScheme::kCW) {
    for (std::size_t c = 0; c < data.cluster_count(); ++c) {
      const double w = 1.0 / static_cast<double>(data.cluster_size(c));
      std::fill(out.values.begin() + static_cast<std::ptrdiff_t>(data.cluster_begin(c)),
                out.values.begin() + static_cast<std::ptrdiff_t>(data.cluster_end(c)), w);
    }
  }
  return out;
}

}  // namespace

WeightVector compute_weights(const ClusteredDataset& data, WeightScheme scheme) {
  if (requires_categories(scheme)) {
    throw ValidationError(std::string("weight scheme ") + std::string(to_string(scheme)) +
                          " requires categorized data");
  }
  return size_only_weights(data, scheme);
}

WeightVector compute_weights(const CategorizedDataset& data, WeightScheme scheme) {
  if (!requires_categories(scheme)) return size_only_weights(data.data(), scheme);

  const ClusteredDataset& base = data.data();
  WeightVector out{scheme, std::vector<double>(base.unit_count())};
  for (std::size_t c = 0; c < base.cluster_count(); ++c) {
    double cluster_factor = 1.0;
    if (scheme == WeightScheme::kOPW) {
      cluster_factor = static_cast<double>(data.distinct_p[c]);
    } else if (scheme == WeightScheme::kMOPW) {
      cluster_factor =
          static_cast<double>(data.distinct_k[c]) * static_cast<double>(data.distinct_l[c]);
    }
    for (std::size_t u = base.cluster_begin(c); u < base.cluster_end(c); ++u) {
      out.values[u] = 1.0 / (cluster_factor * static_cast<double>(data.n_p[u]));
    }
  }
  return out;
}

const WeightVector& WeightCache::get(const CategorizedDataset& data, WeightScheme scheme) {
  Key key{data.base.get(), requires_categories(scheme) ? data.categorizer_key : std::string(),
          static_cast<int>(scheme)};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    it = entries_.emplace(std::move(key), compute_weights(data, scheme)).first;
  }
  return it->second;
}

}  // namespace pairassoc
