#include "pairassoc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>
#include <unordered_set>

#include "pairassoc/errors.hpp"

namespace pairassoc {

ClusteredDataset::ClusteredDataset(std::vector<Cluster> clusters) {
  std::unordered_set<std::string> seen;
  std::size_t total = 0;
  for (const auto& c : clusters) total += c.x.size();
  ids_.reserve(clusters.size());
  offsets_.reserve(clusters.size() + 1);
  x_.reserve(total);
  y_.reserve(total);

  for (auto& c : clusters) {
    if (!seen.insert(c.id).second) {
      throw ValidationError("duplicate cluster id '" + c.id + "'");
    }
    if (c.x.empty()) throw ValidationError("cluster '" + c.id + "' has no units");
    if (c.x.size() != c.y.size()) {
      throw ValidationError("cluster '" + c.id + "' has mismatched x/y lengths");
    }
    for (std::size_t j = 0; j < c.x.size(); ++j) {
      if (!std::isfinite(c.x[j]) || !std::isfinite(c.y[j])) {
        throw ValidationError("cluster '" + c.id + "' contains a non-finite value");
      }
    }
    x_.insert(x_.end(), c.x.begin(), c.x.end());
    y_.insert(y_.end(), c.y.begin(), c.y.end());
    offsets_.push_back(x_.size());
    ids_.push_back(std::move(c.id));
  }
}

ClusteredDataset ClusteredDataset::swapped() const {
  ClusteredDataset out = *this;
  std::swap(out.x_, out.y_);
  return out;
}

ClusteredDataset ClusteredDataset::select(std::span<const std::size_t> clusters) const {
  ClusteredDataset out;
  out.ids_.reserve(clusters.size());
  for (std::size_t c : clusters) {
    const auto xs = x(c);
    const auto ys = y(c);
    out.x_.insert(out.x_.end(), xs.begin(), xs.end());
    out.y_.insert(out.y_.end(), ys.begin(), ys.end());
    out.offsets_.push_back(out.x_.size());
    out.ids_.push_back(ids_[c]);
  }
  return out;
}

ClusteredDataset filter_min_cluster_size(const ClusteredDataset& data, std::size_t n_min) {
  if (n_min == 0) throw ValidationError("minimum cluster size must be at least 1");
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < data.cluster_count(); ++c) {
    if (data.cluster_size(c) >= n_min) keep.push_back(c);
  }
  if (keep.empty()) {
    throw ValidationError("no cluster has at least " + std::to_string(n_min) + " units");
  }
  return data.select(keep);
}

Categorizer Categorizer::from_thresholds(std::vector<double> x_thresholds,
                                         std::vector<double> y_thresholds) {
  return Categorizer{ThresholdRule{std::move(x_thresholds)},
                     ThresholdRule{std::move(y_thresholds)}};
}

Categorizer Categorizer::from_labels(std::vector<int> x_labels, std::vector<int> y_labels) {
  return Categorizer{LabelRule{std::move(x_labels)}, LabelRule{std::move(y_labels)}};
}

namespace {

std::string rule_key(const MarginRule& rule) {
  if (const auto* t = std::get_if<ThresholdRule>(&rule)) {
    std::string key = "t";
    char buf[32];
    for (double v : t->thresholds) {
      std::snprintf(buf, sizeof buf, ":%a", v);
      key += buf;
    }
    return key;
  }
  const auto& labels = std::get<LabelRule>(rule).labels;
  // FNV-1a over the label sequence.
  std::uint64_t h = 1469598103934665603ULL;
  for (int v : labels) {
    h ^= static_cast<std::uint32_t>(v);
    h *= 1099511628211ULL;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "l%zu:%016llx", labels.size(),
                static_cast<unsigned long long>(h));
  return buf;
}

void check_thresholds(std::span<const double> t, const char* margin) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw ValidationError(std::string(margin) + " thresholds must be finite");
    }
    if (i > 0 && !(t[i - 1] < t[i])) {
      throw ValidationError(std::string(margin) + " thresholds must be strictly increasing");
    }
  }
}

// Fills `out` with categories for one margin; returns the number of levels.
int apply_rule(const MarginRule& rule, std::span<const double> values, std::vector<int>& out,
               const char* margin) {
  out.resize(values.size());
  if (const auto* t = std::get_if<ThresholdRule>(&rule)) {
    check_thresholds(t->thresholds, margin);
    for (std::size_t u = 0; u < values.size(); ++u) {
      out[u] = threshold_category(t->thresholds, values[u]);
    }
    return static_cast<int>(t->thresholds.size()) + 1;
  }
  const auto& labels = std::get<LabelRule>(rule).labels;
  if (labels.size() != values.size()) {
    throw ValidationError(std::string(margin) + " label map covers " +
                          std::to_string(labels.size()) + " units but the dataset has " +
                          std::to_string(values.size()));
  }
  int levels = 0;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    if (labels[u] < 1) {
      throw ValidationError(std::string(margin) + " labels must be positive integers");
    }
    out[u] = labels[u];
    levels = std::max(levels, labels[u]);
  }
  return levels;
}

// Multiplicity of each code among `codes`; returns the number of distinct codes.
int multiplicities(std::span<const std::int64_t> codes, std::span<int> mult,
                   std::vector<std::size_t>& order) {
  const std::size_t n = codes.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return codes[a] < codes[b]; });
  int distinct = 0;
  std::size_t run = 0;
  while (run < n) {
    std::size_t end = run + 1;
    while (end < n && codes[order[end]] == codes[order[run]]) ++end;
    for (std::size_t r = run; r < end; ++r) mult[order[r]] = static_cast<int>(end - run);
    ++distinct;
    run = end;
  }
  return distinct;
}

}  // namespace

std::string Categorizer::key() const { return rule_key(x_rule) + "|" + rule_key(y_rule); }

int threshold_category(std::span<const double> thresholds, double value) {
  return 1 + static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), value) -
                              thresholds.begin());
}

CategorizedDataset categorize(std::shared_ptr<const ClusteredDataset> data,
                              const Categorizer& categorizer) {
  if (!data) throw ValidationError("categorize: null dataset");
  CategorizedDataset out;
  out.base = data;
  out.categorizer_key = categorizer.key();
  out.levels_k = apply_rule(categorizer.x_rule, data->x(), out.k, "x");
  out.levels_l = apply_rule(categorizer.y_rule, data->y(), out.l, "y");

  const std::size_t units = data->unit_count();
  const std::size_t clusters = data->cluster_count();
  out.n_k.resize(units);
  out.n_l.resize(units);
  out.n_p.resize(units);
  out.distinct_k.resize(clusters);
  out.distinct_l.resize(clusters);
  out.distinct_p.resize(clusters);

  const auto stride = static_cast<std::int64_t>(out.levels_l) + 1;
  std::vector<std::int64_t> codes;
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < clusters; ++c) {
    const std::size_t begin = data->cluster_begin(c);
    const std::size_t n = data->cluster_size(c);
    codes.resize(n);

    for (std::size_t j = 0; j < n; ++j) codes[j] = out.k[begin + j];
    out.distinct_k[c] =
        multiplicities(codes, std::span<int>(out.n_k).subspan(begin, n), order);

    for (std::size_t j = 0; j < n; ++j) codes[j] = out.l[begin + j];
    out.distinct_l[c] =
        multiplicities(codes, std::span<int>(out.n_l).subspan(begin, n), order);

    for (std::size_t j = 0; j < n; ++j) {
      codes[j] = static_cast<std::int64_t>(out.k[begin + j]) * stride + out.l[begin + j];
    }
    out.distinct_p[c] =
        multiplicities(codes, std::span<int>(out.n_p).subspan(begin, n), order);
  }
  return out;
}

CategorizedDataset categorize(const ClusteredDataset& data, const Categorizer& categorizer) {
  return categorize(std::make_shared<const ClusteredDataset>(data), categorizer);
}

}  // namespace pairassoc
