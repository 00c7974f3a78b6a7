#include "pairassoc/cli/output.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pairassoc/cli/csv.hpp"
#include "pairassoc/errors.hpp"

namespace pairassoc::cli {

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw ComputationError("internal: result row width does not match its columns");
  }
  rows.push_back(std::move(row));
}

OutputFormat parse_output_format(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "csv") return OutputFormat::kCsv;
  if (t == "json") return OutputFormat::kJson;
  throw ValidationError("invalid format '" + std::string(text) + "' (expected csv or json)");
}

std::string format_full(double value) {
  if (!std::isfinite(value)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string render_cell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return format_full(std::get<double>(cell));
}

void write_csv(const ResultTable& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << csv_escape(table.columns[c]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << csv_escape(render_cell(row[c]));
    }
    out << '\n';
  }
}

nlohmann::json to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              obj[table.columns[c]] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
            } else {
              obj[table.columns[c]] = v;
            }
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

std::string render_table(const ResultTable& table, OutputFormat format) {
  if (format == OutputFormat::kJson) return to_json(table).dump(2) + "\n";
  std::ostringstream out;
  write_csv(table, out);
  return out.str();
}

std::string format_estimate_se(double estimate, double se) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f)", estimate, se);
  return buf;
}

std::string format_estimate_coverage(double estimate, double coverage_true,
                                     double coverage_obs) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f, %.2f)", estimate, coverage_true, coverage_obs);
  return buf;
}

std::string format_p_value(double p) {
  if (p < 1e-16) return "<1e-16";
  char buf[32];
  if (p < 1e-4) {
    std::snprintf(buf, sizeof buf, "%.3g", p);
  } else {
    std::snprintf(buf, sizeof buf, "%.5f", p);
  }
  return buf;
}

void print_console_table(std::ostream& out, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << cells[c];
      if (c + 1 < cells.size()) out << std::string(width[c] - cells[c].size() + 2, ' ');
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& row : rows) line(row);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace pairassoc::cli
