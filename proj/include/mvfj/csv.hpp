#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mvfj::csv {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Rows of a comma-separated numeric file, header removed. Blank lines are
/// skipped; a trailing CR is tolerated. Throws ParameterError with
/// `file:line` on malformed rows or a missing header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_numeric(const std::filesystem::path &path,
                   std::size_t expected_columns);

/// Writes `text` with LF line endings exactly as given.
void write_text(const std::filesystem::path &path, std::string_view text);

} // namespace mvfj::csv
