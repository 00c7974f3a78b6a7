#include "pairassoc/cli/app.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairassoc/association.hpp"
#include "pairassoc/cli/csv.hpp"
#include "pairassoc/cli/output.hpp"
#include "pairassoc/errors.hpp"
#include "pairassoc/iss_test.hpp"
#include "pairassoc/simulator.hpp"
#include "pairassoc/weights.hpp"

namespace pairassoc::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20240601;

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  auto flush = [&] {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    item.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      item.push_back(c);
    }
  }
  flush();
  return out;
}

std::vector<double> parse_number_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) {
    const auto v = parse_number(item);
    if (!v) throw ValidationError("invalid number '" + item + "' in " + std::string(what));
    out.push_back(*v);
  }
  return out;
}

std::vector<WeightScheme> parse_schemes(std::string_view text) {
  std::vector<WeightScheme> out;
  for (const std::string& item : split_list(text)) {
    const WeightScheme s = parse_weight_scheme(item);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ValidationError("--weights lists no scheme");
  return out;
}

std::vector<Measure> parse_measures(std::string_view text) {
  std::vector<Measure> out;
  for (const std::string& item : split_list(text)) {
    const Measure m = parse_measure(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ValidationError("no measure given");
  return out;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

unsigned default_threads() {
  const auto v = env("PAIRASSOC_THREADS");
  if (!v) return 0;
  const auto n = parse_number(*v);
  if (!n || *n < 0 || *n != static_cast<double>(static_cast<unsigned>(*n))) {
    throw ValidationError("PAIRASSOC_THREADS must be a non-negative integer");
  }
  return static_cast<unsigned>(*n);
}

std::uint64_t default_seed() {
  const auto v = env("PAIRASSOC_SEED");
  if (!v) return kDefaultSeed;
  std::uint64_t seed = 0;
  const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), seed);
  if (ec != std::errc() || end != v->data() + v->size()) {
    throw ValidationError("PAIRASSOC_SEED must be an unsigned 64-bit integer");
  }
  return seed;
}

struct CommonOptions {
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& common, bool threaded) {
  cmd->add_option("--out", common.out, "Result file; a manifest is written to <out>.manifest.json")
      ->required();
  cmd->add_option("--format", common.format, "Result file format: csv or json")
      ->capture_default_str();
  cmd->add_flag("--quiet", common.quiet, "Do not print the console table");
  if (threaded) {
    cmd->add_option("--threads", common.threads,
                    "Worker threads, 0 = all cores (env PAIRASSOC_THREADS)")
        ->capture_default_str();
  }
}

json config_json(const SimulationConfig& c) {
  return json{{"M", c.M},           {"mu_u", c.mu_u},       {"mu_v", c.mu_v},
              {"sigma_u", c.sigma_u}, {"sigma_v", c.sigma_v}, {"rho_uv", c.rho_uv},
              {"alpha_x", c.alpha_x}, {"alpha_y", c.alpha_y}, {"beta_x", c.beta_x},
              {"beta_y", c.beta_y},   {"sigma_x", c.sigma_x}, {"sigma_y", c.sigma_y},
              {"rho_xy", c.rho_xy},   {"N_K", c.N_K},         {"N_L", c.N_L},
              {"eta_0", c.eta_0},     {"eta_x", c.eta_x},     {"eta_y", c.eta_y},
              {"n_max", c.n_max},     {"n_min", c.n_min},     {"Q", c.Q},
              {"seed", c.seed}};
}

void add_simulation_options(CLI::App* cmd, SimulationConfig& c) {
  cmd->add_option("-M,--clusters", c.M, "Clusters per replicate")->capture_default_str();
  cmd->add_option("--mu-u", c.mu_u, "Mean of latent U")->capture_default_str();
  cmd->add_option("--mu-v", c.mu_v, "Mean of latent V")->capture_default_str();
  cmd->add_option("--sigma-u", c.sigma_u, "SD of latent U")->capture_default_str();
  cmd->add_option("--sigma-v", c.sigma_v, "SD of latent V")->capture_default_str();
  cmd->add_option("--rho-uv", c.rho_uv, "Correlation of (U, V)")->capture_default_str();
  cmd->add_option("--alpha-x", c.alpha_x, "Intercept of X")->capture_default_str();
  cmd->add_option("--alpha-y", c.alpha_y, "Intercept of Y")->capture_default_str();
  cmd->add_option("--beta-x", c.beta_x, "Loading of U on X")->capture_default_str();
  cmd->add_option("--beta-y", c.beta_y, "Loading of V on Y")->capture_default_str();
  cmd->add_option("--sigma-x", c.sigma_x, "Residual SD of X")->capture_default_str();
  cmd->add_option("--sigma-y", c.sigma_y, "Residual SD of Y")->capture_default_str();
  cmd->add_option("--rho-xy", c.rho_xy, "Residual correlation")->capture_default_str();
  cmd->add_option("--n-k", c.N_K, "Severity levels of X")->capture_default_str();
  cmd->add_option("--n-l", c.N_L, "Severity levels of Y")->capture_default_str();
  cmd->add_option("--eta-0", c.eta_0, "Baseline retention coefficient")->capture_default_str();
  cmd->add_option("--eta-x", c.eta_x, "Retention dependence on X")->capture_default_str();
  cmd->add_option("--eta-y", c.eta_y, "Retention dependence on Y")->capture_default_str();
  cmd->add_option("--n-max", c.n_max, "Potential units per cluster")->capture_default_str();
  cmd->add_option("--n-min", c.n_min, "Minimum retained units for a cluster to count")
      ->capture_default_str();
  cmd->add_option("--q", c.Q, "Monte Carlo replicates per setting")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed (env PAIRASSOC_SEED)")->capture_default_str();
}

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["tool"] = kToolName;
    doc_["tool_version"] = kVersion;
    doc_["argv"] = std::move(argv);
    doc_["seed"] = nullptr;
    doc_["input_digest"] = nullptr;
    doc_["outputs"] = json::array();
  }
  json& parameters() { return doc_["parameters"]; }
  void set_seed(std::uint64_t seed) { doc_["seed"] = seed; }
  void set_input(const std::string& path, const std::string& bytes) {
    doc_["input"] = path;
    doc_["input_digest"] = "fnv1a64:" + digest_hex(fnv1a64(bytes));
  }
  void add_output(const std::string& path) { doc_["outputs"].push_back(path); }
  void write(const std::string& result_path) {
    doc_["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text_file(manifest_path(result_path), doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void emit(const ResultTable& table, const CommonOptions& common, const std::string& path,
          Manifest& manifest) {
  write_text_file(path, render_table(table, parse_output_format(common.format)));
  manifest.add_output(path);
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  std::string input;
  std::string measures = "pearson";
  std::string weights = "none,cw,ppw,opw,mopw";
  std::string x_threshold;
  std::string y_threshold;
  std::string x_labels_col;
  std::string y_labels_col;
  std::size_t min_cluster_size = 2;
};

int cmd_estimate(const EstimateOptions& o, const CommonOptions& common,
                 const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Manifest manifest("estimate", argv);
  const std::vector<Measure> measures = parse_measures(o.measures);
  const std::vector<WeightScheme> schemes = parse_schemes(o.weights);
  const std::vector<double> x_thr = parse_number_list(o.x_threshold, "--x-threshold");
  const std::vector<double> y_thr = parse_number_list(o.y_threshold, "--y-threshold");
  if (o.min_cluster_size < 1) throw ValidationError("--min-cluster-size must be at least 1");
  parse_output_format(common.format);

  IngestOptions ingest_options;
  if (!o.x_labels_col.empty()) ingest_options.x_labels_column = o.x_labels_col;
  if (!o.y_labels_col.empty()) ingest_options.y_labels_column = o.y_labels_col;
  const std::string bytes = read_file(o.input);
  IngestResult ingested = ingest_table(parse_csv(bytes), ingest_options);
  for (const std::string& w : ingested.warnings) err << "warning: " << w << '\n';
  manifest.set_input(o.input, bytes);

  const bool has_categories = !x_thr.empty() || !y_thr.empty() || !o.x_labels_col.empty() ||
                              !o.y_labels_col.empty();
  for (WeightScheme s : schemes) {
    if (requires_categories(s) && !has_categories) {
      throw ValidationError("weight scheme " + std::string(to_string(s)) +
                            " needs categories: pass --x-threshold/--y-threshold or "
                            "--x-labels-col/--y-labels-col");
    }
  }
  const bool wants_phi = std::find(measures.begin(), measures.end(), Measure::kPhi) != measures.end();
  if (wants_phi && (x_thr.size() != 1 || y_thr.size() != 1)) {
    throw ValidationError("phi needs exactly one --x-threshold and one --y-threshold");
  }

  auto base = std::make_shared<const ClusteredDataset>(std::move(ingested.data));
  Categorizer categorizer;
  categorizer.x_rule = o.x_labels_col.empty() ? MarginRule{ThresholdRule{x_thr}}
                                              : MarginRule{LabelRule{ingested.x_labels}};
  categorizer.y_rule = o.y_labels_col.empty() ? MarginRule{ThresholdRule{y_thr}}
                                              : MarginRule{LabelRule{ingested.y_labels}};
  const CategorizedDataset categorized = categorize(base, categorizer);
  EstimatorOptions options;
  options.min_cluster_size = o.min_cluster_size;

  ResultTable table;
  table.columns = {"measure", "scheme",     "estimate",   "se",         "ci_low",
                   "ci_high", "n_clusters", "n_units",    "x_threshold", "y_threshold"};
  std::vector<std::vector<std::string>> console;
  WeightCache cache;
  for (Measure m : measures) {
    for (WeightScheme s : schemes) {
      AssociationEstimate e;
      try {
        const WeightVector& w = cache.get(categorized, s);
        switch (m) {
          case Measure::kPearson: e = pearson(*base, w, options); break;
          case Measure::kSpearman: e = spearman(*base, w, options); break;
          case Measure::kPhi: e = phi(*base, w, x_thr[0], y_thr[0], options); break;
        }
      } catch (const ComputationError& ex) {
        throw ComputationError(std::string(to_string(m)) + " with weight scheme " +
                               std::string(to_string(s)) + ": " + ex.what());
      }
      table.add_row({std::string(to_string(m)), std::string(to_string(s)), e.rho_hat, e.se,
                     e.ci_low, e.ci_high, static_cast<std::int64_t>(e.n_clusters_used),
                     static_cast<std::int64_t>(e.n_units_used), o.x_threshold, o.y_threshold});
      char ci[64];
      std::snprintf(ci, sizeof ci, "[%.3f, %.3f]", e.ci_low, e.ci_high);
      console.push_back({std::string(to_string(m)), std::string(to_string(s)),
                         format_estimate_se(e.rho_hat, e.se), ci,
                         std::to_string(e.n_clusters_used), std::to_string(e.n_units_used)});
    }
  }

  manifest.parameters() = json{{"input", o.input},
                               {"measures", o.measures},
                               {"weights", o.weights},
                               {"x_threshold", x_thr},
                               {"y_threshold", y_thr},
                               {"x_labels_col", o.x_labels_col},
                               {"y_labels_col", o.y_labels_col},
                               {"min_cluster_size", o.min_cluster_size},
                               {"format", common.format}};
  emit(table, common, common.out, manifest);
  manifest.write(common.out);
  if (!common.quiet) {
    print_console_table(out, {"measure", "weights", "estimate (se)", "95% CI", "clusters", "units"},
                        console);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  SimulationConfig config;
  bool grid = false;
  std::string measures = "pearson,spearman,phi";
  std::string weights = "cw,ppw,opw,mopw";
};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string fmt_param(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

int cmd_simulate(const SimulateOptions& o, const CommonOptions& common,
                 const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("simulate", argv);
  o.config.validate();
  const std::vector<Measure> measures = parse_measures(o.measures);
  const std::vector<WeightScheme> schemes = parse_schemes(o.weights);
  parse_output_format(common.format);
  const std::vector<SimulationConfig> settings =
      o.grid ? expand_grid(o.config) : std::vector<SimulationConfig>{o.config};
  manifest.set_seed(o.config.seed);
  manifest.parameters() = json{{"config", config_json(o.config)},
                               {"grid", o.grid},
                               {"settings", settings.size()},
                               {"measures", o.measures},
                               {"weights", o.weights},
                               {"threads", common.threads},
                               {"format", common.format}};

  ResultTable table;
  table.columns = {"setting",        "M",           "rho_xy",        "rho_uv",
                   "eta_x",          "eta_y",       "measure",       "scheme",
                   "rho_true",       "rho_obs",     "mean_estimate", "sd_estimate",
                   "mean_se",        "coverage_true", "coverage_obs", "replicates_used",
                   "replicates_dropped", "empty_replicates"};
  std::vector<SettingSummary> summaries;
  summaries.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const SimulationConfig& cfg = settings[i];
    summaries.push_back(run_setting(cfg, measures, schemes, common.threads));
    const SettingSummary& s = summaries.back();
    for (const EstimatorSummary& e : s.estimators) {
      table.add_row({static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(cfg.M),
                     cfg.rho_xy, cfg.rho_uv, cfg.eta_x, cfg.eta_y,
                     std::string(to_string(e.measure)), std::string(to_string(e.scheme)),
                     s.rho_true, s.observed_target(e.measure), e.mean_estimate, e.sd_estimate,
                     e.mean_se, e.coverage_true, e.coverage_obs,
                     static_cast<std::int64_t>(e.replicates_used),
                     static_cast<std::int64_t>(e.replicates_dropped),
                     static_cast<std::int64_t>(s.empty_replicates)});
    }
  }
  emit(table, common, common.out, manifest);
  manifest.write(common.out);

  if (!common.quiet) {
    for (Measure m : measures) {
      out << to_string(m) << ": mean estimate (coverage of true, coverage of observed)\n";
      std::vector<std::string> header = {"M", "rho_xy", "rho_uv", "eta_x", "eta_y", "True", "Obs."};
      for (WeightScheme s : schemes) {
        std::string name(to_string(s));
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        header.push_back(name);
      }
      std::vector<std::vector<std::string>> rows;
      for (const SettingSummary& s : summaries) {
        const SimulationConfig& c = s.config;
        std::vector<std::string> row = {std::to_string(c.M), fmt_param(c.rho_xy),
                                        fmt_param(c.rho_uv), fmt_param(c.eta_x),
                                        fmt_param(c.eta_y), fmt2(s.rho_true),
                                        fmt2(s.observed_target(m))};
        for (WeightScheme w : schemes) {
          const EstimatorSummary& e = s.find(m, w);
          row.push_back(format_estimate_coverage(e.mean_estimate, e.coverage_true, e.coverage_obs));
        }
        rows.push_back(std::move(row));
      }
      print_console_table(out, header, rows);
      out << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- iss-test

struct IssOptions {
  std::string input;
  std::string direction = "both";
  std::string thresholds = "auto:10";
  std::size_t subset_size = 10;
  std::size_t permutations = 100;
  std::uint64_t seed = kDefaultSeed;
  std::string pooling = "all";
};

void parse_threshold_spec(std::string_view text, IssConfig& cfg) {
  std::string t(text);
  std::string lower = t;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "auto") {
    cfg.auto_thresholds = 10;
    return;
  }
  if (lower.rfind("auto:", 0) == 0) {
    const auto n = parse_number(t.substr(5));
    if (!n || *n < 1 || *n != static_cast<double>(static_cast<std::size_t>(*n))) {
      throw ValidationError("--thresholds auto:t needs a positive integer t");
    }
    cfg.auto_thresholds = static_cast<std::size_t>(*n);
    return;
  }
  cfg.thresholds = parse_number_list(t, "--thresholds");
  if (cfg.thresholds.empty()) throw ValidationError("--thresholds lists no value");
}

int cmd_iss(const IssOptions& o, const CommonOptions& common, const std::vector<std::string>& argv,
            std::ostream& out, std::ostream& err) {
  Manifest manifest("iss-test", argv);
  IssConfig base;
  parse_threshold_spec(o.thresholds, base);
  base.subset_size = o.subset_size;
  base.permutations = o.permutations;
  base.seed = o.seed;
  base.pooling = parse_pooling(o.pooling);
  base.validate();
  parse_output_format(common.format);

  std::vector<Direction> directions;
  std::string dir = o.direction;
  std::transform(dir.begin(), dir.end(), dir.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (dir == "both") {
    directions = {Direction::kZisX, Direction::kZisY};
  } else {
    directions = {parse_direction(dir)};
  }

  const std::string bytes = read_file(o.input);
  const IngestResult ingested = ingest_table(parse_csv(bytes));
  for (const std::string& w : ingested.warnings) err << "warning: " << w << '\n';
  manifest.set_input(o.input, bytes);
  manifest.set_seed(o.seed);

  ResultTable table;
  table.columns = {"direction", "thresholds", "subsets", "components_used", "components_skipped",
                   "clusters_skipped", "z_stouffer", "p_stouffer"};
  ResultTable components;
  components.columns = {"direction", "threshold_index", "threshold", "subset", "clusters",
                        "statistic", "p_value", "z", "skipped"};
  std::vector<std::vector<std::string>> console;
  for (Direction d : directions) {
    IssConfig cfg = base;
    cfg.direction = d;
    const IssReport r = iss_test(ingested.data, cfg, common.threads);
    table.add_row({std::string(to_string(d)), static_cast<std::int64_t>(r.thresholds.size()),
                   static_cast<std::int64_t>(r.subset_count),
                   static_cast<std::int64_t>(r.components_used),
                   static_cast<std::int64_t>(r.components_skipped),
                   static_cast<std::int64_t>(r.clusters_skipped), r.z_stouffer, r.p_stouffer});
    for (const IssComponent& c : r.components) {
      components.add_row({std::string(to_string(d)), static_cast<std::int64_t>(c.threshold_index),
                          c.threshold, static_cast<std::int64_t>(c.subset_index),
                          static_cast<std::int64_t>(c.clusters),
                          c.skipped ? std::numeric_limits<double>::quiet_NaN() : c.statistic,
                          c.skipped ? std::numeric_limits<double>::quiet_NaN() : c.p_value,
                          c.skipped ? std::numeric_limits<double>::quiet_NaN() : c.z,
                          static_cast<std::int64_t>(c.skipped ? 1 : 0)});
    }
    char z[32];
    std::snprintf(z, sizeof z, "%.3f", r.z_stouffer);
    console.push_back({std::string(to_string(d)), format_p_value(r.p_stouffer), z,
                       std::to_string(r.components_used), std::to_string(r.components_skipped)});
  }

  manifest.parameters() = json{{"input", o.input},
                               {"direction", o.direction},
                               {"thresholds", o.thresholds},
                               {"subset_size", o.subset_size},
                               {"permutations", o.permutations},
                               {"pooling", o.pooling},
                               {"epsilon", IssConfig::kEpsilon},
                               {"threads", common.threads},
                               {"format", common.format}};
  emit(table, common, common.out, manifest);
  emit(components, common, sidecar_path(common.out, "components"), manifest);
  manifest.write(common.out);
  if (!common.quiet) {
    print_console_table(out, {"direction", "p_Stouffer", "Z", "components", "skipped"}, console);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  SimulationConfig config;
  std::string measure = "pearson";
  std::string weights = "none,cw,ppw,opw,mopw";
  std::string x_splits = "all";
  std::string y_splits = "all";
};

std::vector<SeveritySplit> parse_splits(std::string_view text, int levels) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "all") return SeveritySplit::all(levels);
  std::vector<SeveritySplit> out;
  for (const std::string& item : split_list(text)) out.push_back(SeveritySplit::parse(item, levels));
  if (out.empty()) throw ValidationError("no split given");
  return out;
}

int cmd_sweep(const SweepOptions& o, const CommonOptions& common,
              const std::vector<std::string>& argv, std::ostream& out) {
  Manifest manifest("sweep", argv);
  o.config.validate();
  const std::vector<Measure> measure = parse_measures(o.measure);
  if (measure.size() != 1) throw ValidationError("sweep takes a single --measure");
  const std::vector<WeightScheme> schemes = parse_schemes(o.weights);
  const std::vector<SeveritySplit> xs = parse_splits(o.x_splits, o.config.N_K);
  const std::vector<SeveritySplit> ys = parse_splits(o.y_splits, o.config.N_L);
  parse_output_format(common.format);
  manifest.set_seed(o.config.seed);

  const std::vector<SweepCell> cells =
      dichotomization_sweep(o.config, measure[0], schemes, xs, ys, common.threads);

  ResultTable table;
  table.columns = {"x_split", "y_split", "scheme", "mean_abs_bias", "mc_se", "replicates_used"};
  for (const SweepCell& c : cells) {
    table.add_row({c.x_split, c.y_split, std::string(to_string(c.scheme)), c.mean_abs_bias,
                   c.mc_se, static_cast<std::int64_t>(c.replicates_used)});
  }
  manifest.parameters() = json{{"config", config_json(o.config)},
                               {"measure", o.measure},
                               {"weights", o.weights},
                               {"x_splits", o.x_splits},
                               {"y_splits", o.y_splits},
                               {"threads", common.threads},
                               {"format", common.format}};
  emit(table, common, common.out, manifest);
  manifest.write(common.out);

  if (!common.quiet) {
    for (WeightScheme s : schemes) {
      out << to_string(s) << ": mean |rho_hat - rho_true| (rows x split, columns y split)\n";
      std::vector<std::string> header = {"x \\ y"};
      for (const SeveritySplit& y : ys) header.push_back(y.label(o.config.N_L));
      std::vector<std::vector<std::string>> rows;
      for (const SeveritySplit& x : xs) {
        std::vector<std::string> row = {x.label(o.config.N_K)};
        for (const SeveritySplit& y : ys) {
          for (const SweepCell& c : cells) {
            if (c.scheme == s && c.x_split == x.label(o.config.N_K) &&
                c.y_split == y.label(o.config.N_L)) {
              char buf[32];
              std::snprintf(buf, sizeof buf, "%.3f", c.mean_abs_bias);
              row.push_back(c.missing ? "NA" : buf);
            }
          }
        }
        rows.push_back(std::move(row));
      }
      print_console_table(out, header, rows);
      out << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

std::string manifest_path(const std::string& out_path) { return out_path + ".manifest.json"; }

std::string sidecar_path(const std::string& out_path, std::string_view tag) {
  const std::filesystem::path p(out_path);
  const std::string ext = p.extension().string();
  std::filesystem::path result = p;
  result.replace_extension();
  return result.string() + "." + std::string(tag) + ext;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Marginal association for clustered paired outcomes with informative cluster "
               "and subgroup sizes",
               std::string(kToolName)};
  app.set_version_flag("--version", std::string(kToolName) + " " + std::string(kVersion));
  app.require_subcommand(1);

  CommonOptions common;
  EstimateOptions est;
  SimulateOptions sim;
  IssOptions iss;
  SweepOptions sweep;

  try {
    common.threads = default_threads();
    sim.config.seed = default_seed();
    sweep.config.seed = default_seed();
    iss.seed = default_seed();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  CLI::App* c_est = app.add_subcommand("estimate", "Weighted association estimates from a CSV file");
  c_est->add_option("--input", est.input, "CSV with columns cluster_id,x,y")->required();
  c_est->add_option("--measure,--measures", est.measures, "pearson, spearman, phi (comma list)")
      ->capture_default_str();
  c_est->add_option("--weights", est.weights, "Comma list of none, cw, ppw, opw, mopw")
      ->capture_default_str();
  c_est->add_option("--x-threshold", est.x_threshold,
                    "Cut point(s) for X categories (comma list); phi uses one");
  c_est->add_option("--y-threshold", est.y_threshold,
                    "Cut point(s) for Y categories (comma list); phi uses one");
  c_est->add_option("--x-labels-col", est.x_labels_col, "Column of precomputed X categories");
  c_est->add_option("--y-labels-col", est.y_labels_col, "Column of precomputed Y categories");
  c_est->add_option("--min-cluster-size", est.min_cluster_size,
                    "Clusters with fewer units are ignored")
      ->capture_default_str();
  add_common(c_est, common, false);

  CLI::App* c_sim = app.add_subcommand("simulate", "Monte Carlo study of the weighted estimators");
  add_simulation_options(c_sim, sim.config);
  c_sim->add_flag("--grid", sim.grid, "Run the 32-setting factorial of M, rho_xy, rho_uv, eta_x, eta_y");
  c_sim->add_option("--measures", sim.measures, "Comma list of measures")->capture_default_str();
  c_sim->add_option("--weights", sim.weights, "Comma list of weight schemes")->capture_default_str();
  add_common(c_sim, common, true);

  CLI::App* c_iss = app.add_subcommand("iss-test", "Test for informative subgroup size");
  c_iss->add_option("--input", iss.input, "CSV with columns cluster_id,x,y")->required();
  c_iss->add_option("--direction", iss.direction, "x, y or both")->capture_default_str();
  c_iss->add_option("--thresholds", iss.thresholds, "auto:t or a comma list of cut points")
      ->capture_default_str();
  c_iss->add_option("--subset-size", iss.subset_size, "Clusters per subset")->capture_default_str();
  c_iss->add_option("--permutations", iss.permutations, "Within-cluster permutations per test")
      ->capture_default_str();
  c_iss->add_option("--seed", iss.seed, "Random seed (env PAIRASSOC_SEED)")->capture_default_str();
  c_iss->add_option("--pooling", iss.pooling, "Components to combine: all, thresholds or subsets")
      ->capture_default_str();
  add_common(c_iss, common, true);

  CLI::App* c_sweep = app.add_subcommand("sweep", "Absolute bias over severity dichotomizations");
  add_simulation_options(c_sweep, sweep.config);
  c_sweep->add_option("--measure", sweep.measure, "pearson, spearman or phi")->capture_default_str();
  c_sweep->add_option("--weights", sweep.weights, "Comma list of weight schemes")
      ->capture_default_str();
  c_sweep->add_option("--x-splits", sweep.x_splits, "all or a comma list such as 1-2|3-5,Severity")
      ->capture_default_str();
  c_sweep->add_option("--y-splits", sweep.y_splits, "all or a comma list")->capture_default_str();
  add_common(c_sweep, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (c_est->parsed()) return cmd_estimate(est, common, args, out, err);
    if (c_sim->parsed()) return cmd_simulate(sim, common, args, out);
    if (c_iss->parsed()) return cmd_iss(iss, common, args, out, err);
    if (c_sweep->parsed()) return cmd_sweep(sweep, common, args, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ComputationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitValidation;
}

}  // namespace pairassoc::cli
