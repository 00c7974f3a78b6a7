#include "pairassoc/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "pairassoc/errors.hpp"
#include "pairassoc/normal.hpp"
#include "pairassoc/parallel.hpp"

namespace pairassoc {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("simulation config: " + message);
}

bool finite_all(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void SimulationConfig::validate() const {
  require(finite_all({mu_u, mu_v, sigma_u, sigma_v, rho_uv, alpha_x, alpha_y, beta_x, beta_y,
                      sigma_x, sigma_y, rho_xy, eta_0, eta_x, eta_y}),
          "parameters must be finite");
  require(sigma_u > 0 && sigma_v > 0 && sigma_x > 0 && sigma_y > 0,
          "standard deviations must be positive");
  require(std::abs(rho_uv) <= 1.0, "|rho_uv| must be at most 1");
  require(std::abs(rho_xy) <= 1.0, "|rho_xy| must be at most 1");
  require(N_K >= 1 && N_L >= 1, "N_K and N_L must be at least 1");
  require(n_min >= 1, "n_min must be at least 1");
  require(n_max >= n_min, "n_max must be at least n_min");
  require(M >= 1, "M must be at least 1");
  require(Q >= 1, "Q must be at least 1");
}

std::uint64_t SimulationConfig::setting_hash() const {
  std::uint64_t h = 0x5e771e6b1a5ed00dULL;
  auto feed = [&h](std::uint64_t bits) { h = mix64(h ^ mix64(bits)); };
  auto feed_d = [&feed](double v) { feed(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); };
  feed(M);
  for (double v : {mu_u, mu_v, sigma_u, sigma_v, rho_uv, alpha_x, alpha_y, beta_x, beta_y, sigma_x,
                   sigma_y, rho_xy, eta_0, eta_x, eta_y}) {
    feed_d(v);
  }
  feed(static_cast<std::uint64_t>(N_K));
  feed(static_cast<std::uint64_t>(N_L));
  feed(n_max);
  feed(n_min);
  return h;
}

double SimulationConfig::x_scale() const {
  return std::sqrt(beta_x * beta_x * sigma_u * sigma_u + sigma_x * sigma_x);
}

double SimulationConfig::y_scale() const {
  return std::sqrt(beta_y * beta_y * sigma_v * sigma_v + sigma_y * sigma_y);
}

std::vector<SimulationConfig> expand_grid(const SimulationConfig& base) {
  std::vector<SimulationConfig> grid;
  for (std::size_t m : {20u, 100u}) {
    for (double rxy : {0.0, 0.5}) {
      for (double ruv : {0.0, 0.5}) {
        for (double ex : {0.0, 4.0}) {
          for (double ey : {0.0, 4.0}) {
            SimulationConfig cfg = base;
            cfg.M = m;
            cfg.rho_xy = rxy;
            cfg.rho_uv = ruv;
            cfg.eta_x = ex;
            cfg.eta_y = ey;
            grid.push_back(cfg);
          }
        }
      }
    }
  }
  return grid;
}

std::vector<double> quantile_cuts(int levels) {
  if (levels < 1) throw ValidationError("number of levels must be at least 1");
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(levels - 1));
  for (int h = 1; h < levels; ++h) cuts.push_back(normal_quantile(double(h) / levels));
  return cuts;
}

double retention_probability(double x, double y, const SimulationConfig& cfg) {
  return std::min(logistic(cfg.eta_0 + cfg.eta_x * x), logistic(cfg.eta_0 + cfg.eta_y * y));
}

double rho_true(const SimulationConfig& cfg) {
  const double cov = cfg.beta_x * cfg.beta_y * cfg.rho_uv * cfg.sigma_u * cfg.sigma_v +
                     cfg.rho_xy * cfg.sigma_x * cfg.sigma_y;
  const double vx = cfg.beta_x * cfg.beta_x * cfg.sigma_u * cfg.sigma_u + cfg.sigma_x * cfg.sigma_x;
  const double vy = cfg.beta_y * cfg.beta_y * cfg.sigma_v * cfg.sigma_v + cfg.sigma_y * cfg.sigma_y;
  return cov / std::sqrt(vx * vy);
}

namespace {

GeneratedCluster generate_with_cuts(const SimulationConfig& cfg, RandomStream& stream,
                                    const std::vector<double>& cuts_k,
                                    const std::vector<double>& cuts_l) {
  GeneratedCluster g;
  std::tie(g.u, g.v) =
      bivariate_normal({cfg.mu_u, cfg.mu_v}, {cfg.sigma_u, cfg.sigma_v}, cfg.rho_uv, stream);
  const std::size_t n = cfg.n_max;
  g.x.resize(n);
  g.y.resize(n);
  g.x_std.resize(n);
  g.y_std.resize(n);
  g.k.resize(n);
  g.l.resize(n);
  g.retained.resize(n);
  const double xc = cfg.x_center(), yc = cfg.y_center();
  const double xs = cfg.x_scale(), ys = cfg.y_scale();
  for (std::size_t j = 0; j < n; ++j) {
    const auto [ex, ey] = bivariate_normal({0.0, 0.0}, {cfg.sigma_x, cfg.sigma_y}, cfg.rho_xy, stream);
    const double x = cfg.alpha_x + cfg.beta_x * g.u + ex;
    const double y = cfg.alpha_y + cfg.beta_y * g.v + ey;
    g.x[j] = x;
    g.y[j] = y;
    g.x_std[j] = (x - xc) / xs;
    g.y_std[j] = (y - yc) / ys;
    g.k[j] = threshold_category(cuts_k, g.x_std[j]);
    g.l[j] = threshold_category(cuts_l, g.y_std[j]);
    const bool keep = stream.bernoulli(retention_probability(x, y, cfg));
    g.retained[j] = keep ? 1 : 0;
    g.n_obs += keep ? 1 : 0;
  }
  return g;
}

}  // namespace

GeneratedCluster generate_cluster(const SimulationConfig& cfg, RandomStream& stream) {
  cfg.validate();
  return generate_with_cuts(cfg, stream, quantile_cuts(cfg.N_K), quantile_cuts(cfg.N_L));
}

void PearsonAccumulator::add(double x, double y) {
  ++n_;
  const double dx = x - mean_x_;
  const double dy = y - mean_y_;
  mean_x_ += dx / static_cast<double>(n_);
  mean_y_ += dy / static_cast<double>(n_);
  sxx_ += dx * (x - mean_x_);
  syy_ += dy * (y - mean_y_);
  sxy_ += dx * (y - mean_y_);
}

void PearsonAccumulator::merge(const PearsonAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double dx = o.mean_x_ - mean_x_;
  const double dy = o.mean_y_ - mean_y_;
  sxx_ += o.sxx_ + dx * dx * na * nb / n;
  syy_ += o.syy_ + dy * dy * na * nb / n;
  sxy_ += o.sxy_ + dx * dy * na * nb / n;
  mean_x_ += dx * nb / n;
  mean_y_ += dy * nb / n;
  n_ += o.n_;
}

double PearsonAccumulator::correlation() const {
  if (n_ < 2 || !(sxx_ > 0.0) || !(syy_ > 0.0)) {
    throw DegenerateVarianceError("pooled correlation needs two units and non-constant margins");
  }
  return std::clamp(sxy_ / std::sqrt(sxx_ * syy_), -1.0, 1.0);
}

namespace {

Replicate build_replicate(const SimulationConfig& cfg, std::size_t index, std::uint64_t hash,
                          const std::vector<double>& cuts_k, const std::vector<double>& cuts_l) {
  Replicate rep;
  std::vector<Cluster> clusters;
  for (std::size_t c = 0; c < cfg.M; ++c) {
    RandomStream stream(cfg.seed, {hash, index, c});
    const GeneratedCluster g = generate_with_cuts(cfg, stream, cuts_k, cuts_l);
    ++rep.clusters_generated;
    rep.units_generated += g.x.size();
    if (g.n_obs < cfg.n_min) continue;
    Cluster out;
    out.id = std::to_string(c);
    out.x.reserve(g.n_obs);
    out.y.reserve(g.n_obs);
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      if (!g.retained[j]) continue;
      out.x.push_back(g.x[j]);
      out.y.push_back(g.y[j]);
      rep.k.push_back(g.k[j]);
      rep.l.push_back(g.l[j]);
    }
    clusters.push_back(std::move(out));
  }
  if (!clusters.empty()) {
    std::vector<Cluster> severity = clusters;
    std::size_t u = 0;
    for (Cluster& c : severity) {
      for (std::size_t j = 0; j < c.x.size(); ++j, ++u) {
        c.x[j] = rep.k[u];
        c.y[j] = rep.l[u];
      }
    }
    rep.data = std::make_shared<const ClusteredDataset>(std::move(clusters));
    rep.severity = std::make_shared<const ClusteredDataset>(std::move(severity));
  }
  return rep;
}

WeightVector replicate_weights(const Replicate& rep, WeightScheme scheme,
                               const std::vector<int>& k, const std::vector<int>& l) {
  if (!requires_categories(scheme)) return compute_weights(*rep.data, scheme);
  return compute_weights(categorize(rep.data, Categorizer::from_labels(k, l)), scheme);
}

}  // namespace

Replicate generate_replicate(const SimulationConfig& cfg, std::size_t index) {
  cfg.validate();
  return build_replicate(cfg, index, cfg.setting_hash(), quantile_cuts(cfg.N_K),
                         quantile_cuts(cfg.N_L));
}

AssociationEstimate estimate_replicate(const Replicate& rep, const SimulationConfig& cfg,
                                       Measure measure, WeightScheme scheme,
                                       const WeightVector& weights) {
  if (!rep.data) throw ComputationError("replicate has no eligible cluster");
  EstimatorOptions options;
  options.min_cluster_size = cfg.n_min;
  AssociationEstimate est;
  switch (measure) {
    case Measure::kPearson: est = pearson(*rep.data, weights, options); break;
    case Measure::kSpearman: est = spearman(*rep.severity, weights, options); break;
    case Measure::kPhi:
      est = phi(*rep.data, weights, cfg.x_center(), cfg.y_center(), options);
      break;
  }
  est.scheme = scheme;
  return est;
}

double rho_obs_pooled(std::span<const Replicate> replicates) {
  PearsonAccumulator acc;
  for (const Replicate& rep : replicates) {
    if (!rep.data) continue;
    for (std::size_t u = 0; u < rep.data->unit_count(); ++u) {
      acc.add(rep.data->x()[u], rep.data->y()[u]);
    }
  }
  return acc.correlation();
}

double SettingSummary::observed_target(Measure measure) const {
  for (const ObservedTarget& t : rho_obs_by_measure) {
    if (t.measure == measure) return t.value;
  }
  throw ValidationError("no observed target for measure " + std::string(to_string(measure)));
}

const EstimatorSummary& SettingSummary::find(Measure measure, WeightScheme scheme) const {
  for (const EstimatorSummary& e : estimators) {
    if (e.measure == measure && e.scheme == scheme) return e;
  }
  throw ValidationError("estimator not part of this summary");
}

namespace {

struct IntervalRecord {
  double estimate = 0.0;
  double se = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct ReplicateOutcome {
  bool empty = true;
  std::size_t eligible = 0;
  std::vector<std::optional<IntervalRecord>> intervals;
  PearsonAccumulator raw;
  PearsonAccumulator indicators;
  /// Retained-unit counts by severity pair, row-major (k - 1) * N_L + (l - 1).
  std::vector<std::size_t> severity_counts;
};

// Spearman correlation of the pooled severity pairs, from their counts.
double pooled_spearman(std::span<const std::size_t> counts, int levels_k, int levels_l) {
  const auto nk = static_cast<std::size_t>(levels_k), nl = static_cast<std::size_t>(levels_l);
  std::vector<double> row(nk, 0.0), col(nl, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < nk; ++a) {
    for (std::size_t b = 0; b < nl; ++b) {
      const double c = static_cast<double>(counts[a * nl + b]);
      row[a] += c;
      col[b] += c;
      total += c;
    }
  }
  auto midranks = [total](const std::vector<double>& margin) {
    std::vector<double> r(margin.size());
    double below = 0.0;
    for (std::size_t i = 0; i < margin.size(); ++i) {
      r[i] = (below + 0.5 * margin[i]) / total;
      below += margin[i];
    }
    return r;
  };
  const std::vector<double> rk = midranks(row), rl = midranks(col);
  double mk = 0.0, ml = 0.0;
  for (std::size_t a = 0; a < nk; ++a) mk += row[a] * rk[a] / total;
  for (std::size_t b = 0; b < nl; ++b) ml += col[b] * rl[b] / total;
  double skk = 0.0, sll = 0.0, skl = 0.0;
  for (std::size_t a = 0; a < nk; ++a) skk += row[a] * (rk[a] - mk) * (rk[a] - mk);
  for (std::size_t b = 0; b < nl; ++b) sll += col[b] * (rl[b] - ml) * (rl[b] - ml);
  for (std::size_t a = 0; a < nk; ++a) {
    for (std::size_t b = 0; b < nl; ++b) {
      skl += static_cast<double>(counts[a * nl + b]) * (rk[a] - mk) * (rl[b] - ml);
    }
  }
  if (!(skk > 0.0) || !(sll > 0.0)) {
    throw DegenerateVarianceError("pooled severity categories are constant");
  }
  return skl / std::sqrt(skk * sll);
}

}  // namespace

SettingSummary run_setting(const SimulationConfig& cfg, std::span<const Measure> measures,
                           std::span<const WeightScheme> schemes, unsigned threads) {
  cfg.validate();
  if (measures.empty() || schemes.empty()) {
    throw ValidationError("run_setting needs at least one measure and one scheme");
  }
  const std::uint64_t hash = cfg.setting_hash();
  const std::vector<double> cuts_k = quantile_cuts(cfg.N_K);
  const std::vector<double> cuts_l = quantile_cuts(cfg.N_L);
  const auto table_size = static_cast<std::size_t>(cfg.N_K) * static_cast<std::size_t>(cfg.N_L);
  const double xc = cfg.x_center(), yc = cfg.y_center();

  std::vector<ReplicateOutcome> outcomes(cfg.Q);
  parallel_for(cfg.Q, threads, [&](std::size_t q) {
    const Replicate rep = build_replicate(cfg, q, hash, cuts_k, cuts_l);
    ReplicateOutcome& out = outcomes[q];
    out.intervals.resize(measures.size() * schemes.size());
    if (!rep.data) return;
    out.empty = false;
    out.eligible = rep.data->cluster_count();
    const auto x = rep.data->x();
    const auto y = rep.data->y();
    for (std::size_t u = 0; u < x.size(); ++u) {
      out.raw.add(x[u], y[u]);
      out.indicators.add(x[u] >= xc ? 1.0 : 0.0, y[u] >= yc ? 1.0 : 0.0);
    }
    out.severity_counts.assign(table_size, 0);
    for (std::size_t u = 0; u < x.size(); ++u) {
      ++out.severity_counts[static_cast<std::size_t>(rep.k[u] - 1) * cfg.N_L + (rep.l[u] - 1)];
    }
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const WeightVector w = replicate_weights(rep, schemes[s], rep.k, rep.l);
      for (std::size_t m = 0; m < measures.size(); ++m) {
        try {
          const AssociationEstimate e = estimate_replicate(rep, cfg, measures[m], schemes[s], w);
          out.intervals[m * schemes.size() + s] = IntervalRecord{e.rho_hat, e.se, e.ci_low, e.ci_high};
        } catch (const ComputationError&) {
        }
      }
    }
  });

  SettingSummary summary;
  summary.config = cfg;
  summary.replicates = cfg.Q;
  summary.rho_true = rho_true(cfg);

  PearsonAccumulator raw, indicators;
  std::vector<std::size_t> severity_counts(table_size, 0);
  double eligible_sum = 0.0;
  for (const ReplicateOutcome& o : outcomes) {
    for (std::size_t i = 0; i < o.severity_counts.size(); ++i) {
      severity_counts[i] += o.severity_counts[i];
    }
    if (o.empty) ++summary.empty_replicates;
    eligible_sum += static_cast<double>(o.eligible);
    raw.merge(o.raw);
    indicators.merge(o.indicators);
  }
  summary.mean_eligible_clusters = eligible_sum / static_cast<double>(cfg.Q);
  if (summary.empty_replicates == cfg.Q) {
    throw ComputationError("no replicate retained an eligible cluster");
  }
  summary.rho_obs = raw.correlation();
  for (Measure m : measures) {
    double target = summary.rho_obs;
    if (m == Measure::kSpearman) target = pooled_spearman(severity_counts, cfg.N_K, cfg.N_L);
    if (m == Measure::kPhi) target = indicators.correlation();
    summary.rho_obs_by_measure.push_back({m, target});
  }

  for (std::size_t m = 0; m < measures.size(); ++m) {
    const double obs = summary.observed_target(measures[m]);
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      EstimatorSummary e;
      e.measure = measures[m];
      e.scheme = schemes[s];
      double sum = 0.0, sum_sq = 0.0, se_sum = 0.0;
      std::size_t hit_true = 0, hit_obs = 0;
      for (const ReplicateOutcome& o : outcomes) {
        const auto& rec = o.intervals[m * schemes.size() + s];
        if (!rec) {
          ++e.replicates_dropped;
          continue;
        }
        ++e.replicates_used;
        sum += rec->estimate;
        sum_sq += rec->estimate * rec->estimate;
        se_sum += rec->se;
        hit_true += (rec->low <= summary.rho_true && summary.rho_true <= rec->high) ? 1 : 0;
        hit_obs += (rec->low <= obs && obs <= rec->high) ? 1 : 0;
      }
      if (e.replicates_used == 0) {
        throw ComputationError("estimator " + std::string(to_string(e.measure)) + "/" +
                               std::string(to_string(e.scheme)) +
                               " failed in every replicate");
      }
      const double n = static_cast<double>(e.replicates_used);
      e.mean_estimate = sum / n;
      e.sd_estimate =
          e.replicates_used > 1
              ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)))
              : 0.0;
      e.mean_se = se_sum / n;
      e.coverage_true = static_cast<double>(hit_true) / n;
      e.coverage_obs = static_cast<double>(hit_obs) / n;
      summary.estimators.push_back(e);
    }
  }
  return summary;
}

std::string SeveritySplit::label(int levels) const {
  if (keeps_all()) return "Severity";
  auto block = [](int lo, int hi) {
    return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
  };
  return block(1, cut) + "|" + block(cut + 1, levels);
}

SeveritySplit SeveritySplit::parse(std::string_view text, int levels) {
  std::string compact;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  std::string lower = compact;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "severity") return SeveritySplit{0};
  for (const SeveritySplit& s : all(levels)) {
    if (!s.keeps_all() && s.label(levels) == compact) return s;
  }
  int cut = 0;
  const auto [end, ec] = std::from_chars(compact.data(), compact.data() + compact.size(), cut);
  if (ec == std::errc() && end == compact.data() + compact.size() && cut >= 1 && cut < levels) {
    return SeveritySplit{cut};
  }
  throw ValidationError("invalid severity split '" + std::string(text) + "' for " +
                        std::to_string(levels) + " levels");
}

std::vector<SeveritySplit> SeveritySplit::all(int levels) {
  std::vector<SeveritySplit> out;
  for (int c = 1; c < levels; ++c) out.push_back(SeveritySplit{c});
  out.push_back(SeveritySplit{0});
  return out;
}

std::vector<SweepCell> dichotomization_sweep(const SimulationConfig& cfg, Measure measure,
                                             std::span<const WeightScheme> schemes,
                                             std::span<const SeveritySplit> x_splits,
                                             std::span<const SeveritySplit> y_splits,
                                             unsigned threads) {
  cfg.validate();
  if (schemes.empty() || x_splits.empty() || y_splits.empty()) {
    throw ValidationError("sweep needs at least one scheme and one split per margin");
  }
  for (const SeveritySplit& s : x_splits) {
    if (s.cut < 0 || s.cut >= cfg.N_K) throw ValidationError("x split out of range");
  }
  for (const SeveritySplit& s : y_splits) {
    if (s.cut < 0 || s.cut >= cfg.N_L) throw ValidationError("y split out of range");
  }
  const std::uint64_t hash = cfg.setting_hash();
  const std::vector<double> cuts_k = quantile_cuts(cfg.N_K);
  const std::vector<double> cuts_l = quantile_cuts(cfg.N_L);
  const double target = rho_true(cfg);
  const std::size_t nx = x_splits.size(), ny = y_splits.size(), ns = schemes.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::vector<double>> bias(cfg.Q);
  parallel_for(cfg.Q, threads, [&](std::size_t q) {
    const Replicate rep = build_replicate(cfg, q, hash, cuts_k, cuts_l);
    std::vector<double>& out = bias[q];
    out.assign(nx * ny * ns, nan);
    if (!rep.data) return;
    auto evaluate = [&](WeightScheme scheme, const std::vector<int>& k, const std::vector<int>& l) {
      try {
        const WeightVector w = replicate_weights(rep, scheme, k, l);
        return std::abs(estimate_replicate(rep, cfg, measure, scheme, w).rho_hat - target);
      } catch (const ComputationError&) {
        return nan;
      }
    };
    std::vector<double> split_free(ns, nan);
    for (std::size_t s = 0; s < ns; ++s) {
      if (!requires_categories(schemes[s])) split_free[s] = evaluate(schemes[s], rep.k, rep.l);
    }
    std::vector<int> k(rep.k.size()), l(rep.l.size());
    for (std::size_t i = 0; i < nx; ++i) {
      std::transform(rep.k.begin(), rep.k.end(), k.begin(),
                     [&](int c) { return x_splits[i].apply(c); });
      for (std::size_t j = 0; j < ny; ++j) {
        std::transform(rep.l.begin(), rep.l.end(), l.begin(),
                       [&](int c) { return y_splits[j].apply(c); });
        for (std::size_t s = 0; s < ns; ++s) {
          out[(i * ny + j) * ns + s] =
              requires_categories(schemes[s]) ? evaluate(schemes[s], k, l) : split_free[s];
        }
      }
    }
  });

  std::vector<SweepCell> cells;
  cells.reserve(nx * ny * ns);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t s = 0; s < ns; ++s) {
        SweepCell cell;
        cell.x_split = x_splits[i].label(cfg.N_K);
        cell.y_split = y_splits[j].label(cfg.N_L);
        cell.scheme = schemes[s];
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& rep : bias) {
          const double b = rep[(i * ny + j) * ns + s];
          if (std::isnan(b)) continue;
          ++cell.replicates_used;
          sum += b;
          sum_sq += b * b;
        }
        if (cell.replicates_used == 0) {
          cell.missing = true;
          cell.mean_abs_bias = nan;
          cell.mc_se = nan;
        } else {
          const double n = static_cast<double>(cell.replicates_used);
          cell.mean_abs_bias = sum / n;
          const double var =
              n > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
          cell.mc_se = std::sqrt(var / n);
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace pairassoc
