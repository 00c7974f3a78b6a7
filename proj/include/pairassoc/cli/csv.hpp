#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairassoc/dataset.hpp"

namespace pairassoc::cli {

/// A parsed CSV file: header fields plus data records, each tagged with the
/// physical line on which it starts.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
};

/// RFC 4180 parsing: comma separators, double-quoted fields with "" escapes and
/// embedded line breaks, LF or CRLF endings, optional UTF-8 byte order mark.
/// Blank lines are skipped. Throws ParseError for an unterminated quote, text
/// after a closing quote, a record whose width differs from the header, or a
/// missing header.
CsvTable parse_csv(std::string_view text);

/// Reads and parses a file; ValidationError if it cannot be read.
CsvTable read_csv_file(const std::string& path);
std::string read_file(const std::string& path);

struct IngestOptions {
  /// Optional columns of positive integer category labels.
  std::optional<std::string> x_labels_column;
  std::optional<std::string> y_labels_column;
};

struct IngestResult {
  ClusteredDataset data;
  /// Labels aligned with data's grouped unit order, when requested.
  std::vector<int> x_labels;
  std::vector<int> y_labels;
  std::vector<std::string> warnings;
};

/// Builds a dataset from a table with columns cluster_id, x, y. Rows are grouped
/// by cluster_id in order of first appearance, keeping file order within each
/// cluster. Unused extra columns produce warnings. Throws ParseError naming the
/// line of a blank or non-numeric cell, or line 1 for a missing column.
IngestResult ingest_table(const CsvTable& table, const IngestOptions& options = {});
IngestResult ingest_csv(const std::string& path, const IngestOptions& options = {});

/// Strict numeric parse of a whole cell (surrounding spaces allowed).
std::optional<double> parse_number(std::string_view text);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace pairassoc::cli
