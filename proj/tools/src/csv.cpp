#include "tunnelshock_cli/csv.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace tunnelshock::cli {

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", *d);
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return fmt::format("{}", *i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : path_(path), columns_(columns.size()), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::ios_base::failure(fmt::format("cannot write '{}'", path));
  std::string line;
  for (std::size_t i = 0; i < columns.size(); ++i) line += (i ? "," : "") + columns[i];
  out_ << line << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) {
    throw std::logic_error(fmt::format("{}: row has {} cells, header has {}", path_, cells.size(), columns_));
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += format_cell(cells[i]);
  }
  out_ << line << '\n';
  if (!out_) throw std::ios_base::failure(fmt::format("write to '{}' failed", path_));
  ++rows_;
}

}  // namespace tunnelshock::cli
