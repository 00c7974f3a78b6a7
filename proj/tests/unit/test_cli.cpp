#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>
#include <sstream>

#include <json.hpp>

#include "pairassoc/association.hpp"
#include "pairassoc/cli/app.hpp"
#include "pairassoc/cli/csv.hpp"
#include "pairassoc/cli/output.hpp"
#include "pairassoc/errors.hpp"
#include "pairassoc/random_stream.hpp"

using namespace pairassoc;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pairassoc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("pairassoc_cli_tests_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path_of(const std::string& name) { return (scratch_dir() / name).string(); }

std::string write(const std::string& name, const std::string& content) {
  const std::string p = path_of(name);
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

std::string slurp(const std::string& p) { return cli::read_file(p); }

const char* kSmall =
    "cluster_id,x,y\n"
    "a,1,2\n"
    "a,2,3\n"
    "a,3,1\n"
    "b,4,4\n"
    "b,5,6\n";

std::string signal_csv(double slope, bool constant_y) {
  RandomStream s(404, {});
  std::ostringstream o;
  o << "cluster_id,x,y\n";
  for (int c = 0; c < 60; ++c) {
    const double level = s.normal();
    for (int j = 0; j < 8; ++j) {
      const double x = level + s.normal();
      const double y = constant_y ? 1.0 : level + slope * x + 0.5 * s.normal();
      o << "c" << c << ',' << cli::format_full(x) << ',' << cli::format_full(y) << '\n';
    }
  }
  return o.str();
}

}  // namespace

TEST_CASE("CSV parsing") {
  const auto t = cli::parse_csv("\xEF\xBB\xBF" "a,b\r\n1,\"x,y\"\r\n\r\n2,\"he said \"\"hi\"\"\"\n3,\"two\nlines\"\n4,z");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[1][1] == "he said \"hi\"");
  CHECK(t.rows[2][1] == "two\nlines");
  CHECK(t.row_lines == std::vector<std::size_t>{2, 4, 5, 7});
  CHECK(t.rows[3][1] == "z");
}

TEST_CASE("CSV errors carry line numbers") {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      cli::parse_csv(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("a,b\n1,2\n3\n") == 3);
  CHECK(line_of("a,b\n1,2\n\"3,4\n") == 3);
  CHECK(line_of("a,b\n1,\"2\"x\n") == 2);
  CHECK(line_of("") == 1);
  CHECK(line_of("\n\n") == 1);
}

TEST_CASE("CSV escaping round trips") {
  for (std::string field : {"plain", "a,b", "q\"uote", "line\nbreak", ""}) {
    const auto t = cli::parse_csv("h\n" + cli::csv_escape(field) + "\n");
    if (field.empty()) {
      CHECK(t.rows.empty());
    } else {
      CHECK(t.rows.at(0).at(0) == field);
    }
  }
  RandomStream s(8, {});
  for (int i = 0; i < 1000; ++i) {
    const double v = s.normal() * std::pow(10.0, static_cast<double>(s.uniform_index(40)) - 20.0);
    CHECK(cli::parse_number(cli::format_full(v)).value() == v);
  }
  CHECK_FALSE(cli::parse_number("1.5x").has_value());
  CHECK_FALSE(cli::parse_number("nan").has_value());
  CHECK_FALSE(cli::parse_number("").has_value());
  CHECK(cli::parse_number(" 2.5 ").value() == 2.5);
}

TEST_CASE("ingest groups rows by first appearance") {
  const auto r = cli::ingest_table(cli::parse_csv("y,cluster_id,x,note,kx\n1,b,10,u,2\n2,a,20,v,1\n3,b,30,w,3\n"),
                                   {std::string("kx"), std::nullopt});
  REQUIRE(r.data.cluster_count() == 2);
  CHECK(r.data.id(0) == "b");
  CHECK(r.data.id(1) == "a");
  CHECK(std::vector<double>(r.data.x().begin(), r.data.x().end()) == std::vector<double>{10, 30, 20});
  CHECK(std::vector<double>(r.data.y().begin(), r.data.y().end()) == std::vector<double>{1, 3, 2});
  CHECK(r.x_labels == std::vector<int>{2, 3, 1});
  CHECK(r.y_labels.empty());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("ingest errors") {
  auto message = [](std::string_view text, cli::IngestOptions o = {}) -> std::string {
    try {
      cli::ingest_table(cli::parse_csv(text), o);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("cluster_id,x\na,1\n").rfind("line 1:", 0) == 0);
  CHECK(message("cluster_id,x,y\na,1,2\na,,3\n") == "line 3: empty value in column 'x'");
  CHECK(message("cluster_id,x,y\na,1,2\na,1,abc\n").rfind("line 3:", 0) == 0);
  CHECK(message("cluster_id,x,y,k\na,1,2,0\n", {std::string("k"), std::nullopt}).rfind("line 2:", 0) == 0);
  CHECK(message("cluster_id,x,y,k\na,1,2,1.5\n", {std::string("k"), std::nullopt}).rfind("line 2:", 0) == 0);
}

TEST_CASE("estimate command matches a direct weighted computation") {
  const std::string in = write("small.csv", kSmall);
  const std::string out = path_of("small_est.csv");
  const auto r = run_cli({"estimate", "--input", in, "--out", out, "--weights", "cw", "--quiet"});
  REQUIRE(r.code == 0);
  const auto t = cli::parse_csv(slurp(out));
  REQUIRE(t.rows.size() == 1);
  CHECK(t.header[0] == "measure");
  CHECK(t.rows[0][0] == "pearson");
  CHECK(t.rows[0][1] == "cw");
  // Direct weighted Pearson with weights 1/3 and 1/2.
  const double x[] = {1, 2, 3, 4, 5}, y[] = {2, 3, 1, 4, 6}, w[] = {1. / 3, 1. / 3, 1. / 3, .5, .5};
  double sw = 0, mx = 0, my = 0;
  for (int i = 0; i < 5; ++i) sw += w[i], mx += w[i] * x[i], my += w[i] * y[i];
  mx /= sw, my /= sw;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  const double rho = std::stod(t.rows[0][2]);
  CHECK(std::fabs(rho - sxy / std::sqrt(sxx * syy)) < 1e-10);
  const auto direct = pearson(ClusteredDataset(std::vector<Cluster>{{"a", {1, 2, 3}, {2, 3, 1}}, {"b", {4, 5}, {4, 6}}}),
                              WeightScheme::kCW);
  CHECK(std::stod(t.rows[0][3]) == direct.se);
  CHECK(std::stod(t.rows[0][4]) == direct.ci_low);
}

TEST_CASE("estimate: size-based schemes ignore thresholds") {
  const std::string in = write("thr.csv", signal_csv(0.5, false));
  const std::string a = path_of("thr_a.csv"), b = path_of("thr_b.csv");
  REQUIRE(run_cli({"estimate", "--input", in, "--out", a, "--measures", "pearson,spearman,phi",
                   "--x-threshold", "0", "--y-threshold", "0", "--quiet"}).code == 0);
  REQUIRE(run_cli({"estimate", "--input", in, "--out", b, "--measures", "pearson,spearman,phi",
                   "--x-threshold", "0.7", "--y-threshold", "-0.4", "--quiet"}).code == 0);
  const auto ta = cli::parse_csv(slurp(a)), tb = cli::parse_csv(slurp(b));
  REQUIRE(ta.rows.size() == 15);
  REQUIRE(tb.rows.size() == 15);
  bool category_schemes_differ = false;
  for (std::size_t i = 0; i < ta.rows.size(); ++i) {
    const bool size_only = ta.rows[i][1] == "none" || ta.rows[i][1] == "cw";
    if (size_only && ta.rows[i][0] != "phi") {
      CHECK(ta.rows[i][2] == tb.rows[i][2]);
      CHECK(ta.rows[i][3] == tb.rows[i][3]);
    } else if (!size_only && ta.rows[i][2] != tb.rows[i][2]) {
      category_schemes_differ = true;
    }
  }
  CHECK(category_schemes_differ);
}

TEST_CASE("estimate: minimum cluster size and error exits") {
  const std::string in = write("mcs.csv", kSmall);
  const std::string out = path_of("mcs_out.csv");
  auto r = run_cli({"estimate", "--input", in, "--out", out, "--min-cluster-size", "10", "--weights", "cw"});
  CHECK(r.code == cli::kExitComputation);
  CHECK(r.err.find("error:") != std::string::npos);
  r = run_cli({"estimate", "--input", in, "--out", out, "--min-cluster-size", "3", "--weights", "cw", "--quiet"});
  REQUIRE(r.code == 0);
  CHECK(cli::parse_csv(slurp(out)).rows.at(0).at(6) == "1");
  r = run_cli({"estimate", "--input", path_of("missing.csv"), "--out", out});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({"estimate", "--input", in, "--out", out, "--measures", "kendall"});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({"estimate", "--input", in, "--out", out, "--weights", "ppw"});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({"estimate", "--input", in, "--out", out, "--measures", "phi", "--weights", "cw"});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({"estimate", "--input", in, "--out", out, "--no-such-flag"});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({"estimate", "--input", write("blank.csv", "cluster_id,x,y\na,1,2\na,,3\n"), "--out", out});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("line 3") != std::string::npos);
  r = run_cli({"estimate", "--input", write("empty.csv", ""), "--out", out});
  CHECK(r.code == cli::kExitValidation);
  r = run_cli({});
  CHECK(r.code == cli::kExitValidation);
}

TEST_CASE("estimate writes a manifest") {
  const std::string in = write("man.csv", kSmall);
  const std::string out = path_of("man_out.csv");
  REQUIRE(run_cli({"estimate", "--input", in, "--out", out, "--weights", "none", "--quiet"}).code == 0);
  const auto m = nlohmann::json::parse(slurp(cli::manifest_path(out)));
  CHECK(m["command"] == "estimate");
  CHECK(m["tool"] == "pairassoc");
  CHECK(m["tool_version"] == "1.0.0");
  CHECK(m["input_digest"] == "fnv1a64:" + cli::digest_hex(cli::fnv1a64(kSmall)));
  CHECK(m["parameters"]["min_cluster_size"] == 2);
  CHECK(m["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(cli::sidecar_path("res.csv", "components") == "res.components.csv");
  CHECK(cli::manifest_path("res.csv") == "res.csv.manifest.json");
}

TEST_CASE("JSON output mirrors CSV output") {
  const std::string in = write("fmt.csv", kSmall);
  const std::string c = path_of("fmt_out.csv"), j = path_of("fmt_out.json");
  REQUIRE(run_cli({"estimate", "--input", in, "--out", c, "--measures", "pearson,spearman", "--weights", "none,cw", "--quiet"}).code == 0);
  REQUIRE(run_cli({"estimate", "--input", in, "--out", j, "--format", "json", "--measures", "pearson,spearman", "--weights", "none,cw", "--quiet"}).code == 0);
  const auto t = cli::parse_csv(slurp(c));
  const auto js = nlohmann::json::parse(slurp(j));
  REQUIRE(js.is_array());
  REQUIRE(js.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      const auto& v = js[i][t.header[k]];
      if (v.is_string()) {
        CHECK(v.get<std::string>() == t.rows[i][k]);
      } else if (v.is_null()) {
        CHECK(t.rows[i][k].empty());
      } else {
        CHECK(v.get<double>() == std::stod(t.rows[i][k]));
      }
    }
  }
}

TEST_CASE("simulate is reproducible and thread-independent") {
  const std::string a = path_of("sim_a.csv"), b = path_of("sim_b.csv");
  const std::vector<std::string> common{"simulate", "-M", "20", "--n-max", "8", "--q", "6", "--rho-uv", "0.5", "--eta-x", "4", "--quiet"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a, "--threads", "1"});
  args_b.insert(args_b.end(), {"--out", b, "--threads", "3"});
  REQUIRE(run_cli(args_a).code == 0);
  REQUIRE(run_cli(args_b).code == 0);
  CHECK(slurp(a) == slurp(b));
  const auto t = cli::parse_csv(slurp(a));
  CHECK(t.rows.size() == 12);
  const auto m = nlohmann::json::parse(slurp(cli::manifest_path(a)));
  CHECK(m["seed"] == 20240601);
  CHECK(m["command"] == "simulate");
  const std::string c = path_of("sim_c.csv");
  auto args_c = common;
  args_c.insert(args_c.end(), {"--out", c, "--seed", "7"});
  REQUIRE(run_cli(args_c).code == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("simulate grid covers every setting") {
  const std::string out = path_of("grid.csv");
  REQUIRE(run_cli({"simulate", "--grid", "--q", "1", "--n-max", "3", "--measures", "pearson", "--out", out, "--quiet"}).code == 0);
  const auto t = cli::parse_csv(slurp(out));
  CHECK(t.rows.size() == 32 * 4);
  std::set<std::string> settings;
  for (const auto& row : t.rows) settings.insert(row[0]);
  CHECK(settings.size() == 32);
  CHECK(run_cli({"simulate", "--q", "0", "--out", out}).code == cli::kExitValidation);
  CHECK(run_cli({"simulate", "--rho-uv", "2", "--out", out}).code == cli::kExitValidation);
}

TEST_CASE("iss-test command") {
  const std::string sig = write("sig.csv", signal_csv(1.5, false));
  const std::string out = path_of("iss.csv");
  auto r = run_cli({"iss-test", "--input", sig, "--out", out, "--permutations", "200", "--quiet"});
  REQUIRE(r.code == 0);
  auto t = cli::parse_csv(slurp(out));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "Z=X");
  CHECK(t.rows[1][0] == "Z=Y");
  const std::size_t p_col = std::find(t.header.begin(), t.header.end(), "p_stouffer") - t.header.begin();
  REQUIRE(p_col < t.header.size());
  CHECK(std::stod(t.rows[0][p_col]) < 0.01);
  CHECK(std::stod(t.rows[1][p_col]) < 0.01);
  const auto comps = cli::parse_csv(slurp(cli::sidecar_path(out, "components")));
  CHECK(comps.rows.size() == 2 * 10 * 6);
  const std::string first = slurp(out);
  REQUIRE(run_cli({"iss-test", "--input", sig, "--out", out, "--permutations", "200", "--quiet", "--threads", "2"}).code == 0);
  CHECK(slurp(out) == first);

  const std::string flat = write("flat.csv", signal_csv(0.0, true));
  r = run_cli({"iss-test", "--input", flat, "--out", out, "--direction", "x", "--quiet"});
  REQUIRE(r.code == 0);
  t = cli::parse_csv(slurp(out));
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][p_col]) > 0.99);
  CHECK(run_cli({"iss-test", "--input", flat, "--out", out, "--direction", "y"}).code == cli::kExitValidation);
  CHECK(run_cli({"iss-test", "--input", sig, "--out", out, "--subset-size", "1000"}).code == cli::kExitValidation);
  CHECK(run_cli({"iss-test", "--input", sig, "--out", out, "--thresholds", "2,1"}).code == cli::kExitValidation);
}

TEST_CASE("sweep command") {
  const std::string a = path_of("sweep_a.csv"), b = path_of("sweep_b.csv");
  const std::vector<std::string> common{"sweep", "-M", "20", "--n-max", "8", "--q", "4", "--eta-x", "4", "--weights", "cw,opw", "--quiet"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a});
  args_b.insert(args_b.end(), {"--out", b, "--threads", "2"});
  REQUIRE(run_cli(args_a).code == 0);
  REQUIRE(run_cli(args_b).code == 0);
  CHECK(slurp(a) == slurp(b));
  const auto t = cli::parse_csv(slurp(a));
  REQUIRE(t.rows.size() == 5 * 5 * 2);
  std::set<std::string> cw_values;
  for (const auto& row : t.rows)
    if (row[2] == "cw") cw_values.insert(row[3]);
  CHECK(cw_values.size() == 1);
  auto args_c = common;
  args_c.insert(args_c.end(), {"--out", a, "--x-splits", "1-2|3-5,Severity", "--y-splits", "Severity"});
  REQUIRE(run_cli(args_c).code == 0);
  CHECK(cli::parse_csv(slurp(a)).rows.size() == 2 * 1 * 2);
  args_c.back() = "1-7|8";
  CHECK(run_cli(args_c).code == cli::kExitValidation);
}

TEST_CASE("console formatting helpers") {
  CHECK(cli::format_estimate_se(0.1481, 0.00512) == "0.148 (0.005)");
  CHECK(cli::format_estimate_coverage(0.401, 0.94, 0.938) == "0.40 (0.94, 0.94)");
  CHECK(cli::format_p_value(0.0) == "<1e-16");
  CHECK(cli::format_full(std::nan("")) == "NA");
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
