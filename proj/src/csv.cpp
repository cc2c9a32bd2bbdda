#include "bohmstab/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "bohmstab/error.hpp"

namespace bohmstab {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

std::string cell_text(const CsvCell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return std::get<std::string>(cell);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> columns) : out_(out), width_(columns.size()) {
  out_ << kCsvSchemaLine << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<CsvCell> cells) { row(std::vector<CsvCell>(cells)); }

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != width_) throw Error(ErrorCode::Io, "CSV row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cell_text(cells[i]);
  out_ << '\n';
}

std::size_t CsvTable::index(std::string_view column) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) return i;
  }
  throw Error(ErrorCode::Io, "missing CSV column '" + std::string(column) + "'");
}

std::vector<double> CsvTable::column(std::string_view name) const {
  const std::size_t i = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double v = 0.0;
    const std::string& s = r.at(i);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::Io, "non-numeric value '" + s + "' in column '" + std::string(name) + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> CsvTable::text_column(std::string_view name) const {
  const std::size_t i = index(name);
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.at(i));
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == kCsvSchemaLine) table.has_schema_line = true;
      continue;
    }
    auto fields = split(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) throw Error(ErrorCode::Io, "ragged CSV row: " + line);
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw Error(ErrorCode::Io, "CSV has no header row");
  return table;
}

}  // namespace bohmstab
