#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace tunnelshock::cli {

/// One CSV cell. Doubles are written with 17 significant digits; an empty
/// string writes an empty cell.
using Cell = std::variant<double, std::int64_t, std::string>;

/// CSV file with a fixed header. Rows must have one cell per column.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns);

  void row(const std::vector<Cell>& cells);
  const std::string& path() const { return path_; }
  std::size_t rows() const { return rows_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::ofstream out_;
};

std::string format_cell(const Cell& cell);

}  // namespace tunnelshock::cli
