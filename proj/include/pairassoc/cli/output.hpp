#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace pairassoc::cli {

/// A result cell: text, integer count, or real number.
using Cell = std::variant<std::string, std::int64_t, double>;

/// Column-oriented result records, written as CSV or as a JSON array of objects
/// with the same keys and values.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

enum class OutputFormat { kCsv, kJson };
OutputFormat parse_output_format(std::string_view text);

/// Real numbers in full round-trip precision ("%.17g"); non-finite values as NA.
std::string format_full(double value);
std::string render_cell(const Cell& cell);

void write_csv(const ResultTable& table, std::ostream& out);
nlohmann::json to_json(const ResultTable& table);

/// Writes `content` to `path`, throwing ValidationError on failure.
void write_text_file(const std::string& path, const std::string& content);
std::string render_table(const ResultTable& table, OutputFormat format);

/// "0.148 (0.005)": estimate and standard error with three decimals.
std::string format_estimate_se(double estimate, double se);
/// "0.40 (0.94, 0.94)": mean estimate and the two coverages.
std::string format_estimate_coverage(double estimate, double coverage_true,
                                     double coverage_obs);
/// Three decimals, or "<1e-16"-style bounds for tiny p-values.
std::string format_p_value(double p);

/// Left-aligned plain-text table for the console.
void print_console_table(std::ostream& out, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// 64-bit FNV-1a digest, rendered as 16 hex digits by digest_hex.
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::uint64_t digest);

}  // namespace pairassoc::cli
