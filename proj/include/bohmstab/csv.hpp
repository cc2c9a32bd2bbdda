#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bohmstab {

inline constexpr std::string_view kCsvSchemaLine = "# bohmstab-csv v1";

/// Shortest round-trip decimal form of a double; identical across runs.
std::string format_double(double value);

using CsvCell = std::variant<double, long long, std::string>;

/// Writes the schema comment line and header on construction, then rows.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> columns);

  void row(std::initializer_list<CsvCell> cells);
  void row(const std::vector<CsvCell>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool has_schema_line = false;

  std::size_t index(std::string_view column) const;
  std::vector<double> column(std::string_view name) const;
  std::vector<std::string> text_column(std::string_view name) const;
};

/// Parses a comma-separated table. Lines starting with '#' are comments; the
/// schema line is recorded in `has_schema_line`.
CsvTable read_csv(std::istream& in);

}  // namespace bohmstab
