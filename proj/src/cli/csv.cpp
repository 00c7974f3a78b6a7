#include "pairassoc/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "pairassoc/errors.hpp"

namespace pairassoc::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool quoted = false;       // inside a quoted field
  bool was_quoted = false;   // current field was quoted and has been closed
  bool header_done = false;

  auto finish_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    was_quoted = false;
    if (!is_blank_record(record)) {
      if (!header_done) {
        table.header = std::move(record);
        header_done = true;
      } else {
        if (record.size() != table.header.size()) {
          throw ParseError(record_line, "expected " + std::to_string(table.header.size()) +
                                            " fields, found " + std::to_string(record.size()));
        }
        table.rows.push_back(std::move(record));
        table.row_lines.push_back(record_line);
      }
    }
    record.clear();
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        was_quoted = true;
        ++i;
        continue;
      }
      if (c == '\n') ++line;
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      was_quoted = false;
      ++i;
      continue;
    }
    if (c == '\r' || c == '\n') {
      finish_record();
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
      record_line = line;
      continue;
    }
    if (c == '"') {
      if (!field.empty() && !trim(field).empty()) {
        throw ParseError(line, "quote inside an unquoted field");
      }
      if (was_quoted) throw ParseError(line, "unexpected quote after a closed quoted field");
      field.clear();
      quoted = true;
      ++i;
      continue;
    }
    if (was_quoted && c != ' ' && c != '\t') {
      throw ParseError(line, "text after a closing quote");
    }
    if (!was_quoted) field.push_back(c);
    ++i;
  }
  if (quoted) throw ParseError(record_line, "unterminated quoted field");
  if (!field.empty() || !record.empty() || was_quoted) finish_record();
  if (!header_done) throw ParseError(1, "missing header row");
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw ValidationError("cannot read '" + path + "'");
  return buffer.str();
}

CsvTable read_csv_file(const std::string& path) { return parse_csv(read_file(path)); }

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

IngestResult ingest_table(const CsvTable& table, const IngestOptions& options) {
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const std::string name(trim(table.header[i]));
    if (!columns.emplace(name, i).second) {
      throw ParseError(1, "duplicate column '" + name + "'");
    }
  }
  auto require_column = [&](const std::string& name) {
    const auto it = columns.find(name);
    if (it == columns.end()) throw ParseError(1, "missing column '" + name + "'");
    return it->second;
  };
  const std::size_t id_col = require_column("cluster_id");
  const std::size_t x_col = require_column("x");
  const std::size_t y_col = require_column("y");
  std::optional<std::size_t> xl_col, yl_col;
  if (options.x_labels_column) xl_col = require_column(*options.x_labels_column);
  if (options.y_labels_column) yl_col = require_column(*options.y_labels_column);

  IngestResult result;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i == id_col || i == x_col || i == y_col || i == xl_col || i == yl_col) continue;
    result.warnings.push_back("ignoring extra column '" + std::string(trim(table.header[i])) +
                              "'");
  }

  auto number = [&](std::size_t row, std::size_t col) {
    const std::string& cell = table.rows[row][col];
    const std::string name(trim(table.header[col]));
    if (trim(cell).empty()) {
      throw ParseError(table.row_lines[row], "empty value in column '" + name + "'");
    }
    const auto v = parse_number(cell);
    if (!v) {
      throw ParseError(table.row_lines[row],
                       "non-numeric value '" + cell + "' in column '" + name + "'");
    }
    return *v;
  };
  auto label = [&](std::size_t row, std::size_t col) {
    const double v = number(row, col);
    if (v < 1.0 || v != std::floor(v) || v > 1e9) {
      throw ParseError(table.row_lines[row], "category label '" + table.rows[row][col] +
                                                 "' is not a positive integer");
    }
    return static_cast<int>(v);
  };

  struct Pending {
    Cluster cluster;
    std::vector<int> xl, yl;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string id(trim(table.rows[r][id_col]));
    if (id.empty()) throw ParseError(table.row_lines[r], "empty value in column 'cluster_id'");
    const auto [it, inserted] = index.emplace(id, pending.size());
    if (inserted) {
      pending.emplace_back();
      pending.back().cluster.id = id;
    }
    Pending& p = pending[it->second];
    p.cluster.x.push_back(number(r, x_col));
    p.cluster.y.push_back(number(r, y_col));
    if (xl_col) p.xl.push_back(label(r, *xl_col));
    if (yl_col) p.yl.push_back(label(r, *yl_col));
  }
  if (pending.empty()) throw ParseError(1, "no data rows after the header");

  std::vector<Cluster> clusters;
  clusters.reserve(pending.size());
  for (Pending& p : pending) {
    result.x_labels.insert(result.x_labels.end(), p.xl.begin(), p.xl.end());
    result.y_labels.insert(result.y_labels.end(), p.yl.begin(), p.yl.end());
    clusters.push_back(std::move(p.cluster));
  }
  result.data = ClusteredDataset(std::move(clusters));
  return result;
}

IngestResult ingest_csv(const std::string& path, const IngestOptions& options) {
  return ingest_table(read_csv_file(path), options);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace pairassoc::cli
