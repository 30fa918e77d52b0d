#include "mvfj/csv.hpp"

#include "mvfj/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mvfj::csv {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

} // namespace

Table read_numeric(const std::filesystem::path &path,
                   std::size_t expected_columns) {
  std::ifstream in(path);
  if (!in)
    throw ParameterError(path.string() + ": cannot open file");

  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty())
      continue;
    const auto fields = split(body);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != expected_columns)
      throw ParameterError(where + ": expected " +
                           std::to_string(expected_columns) + " columns, got " +
                           std::to_string(fields.size()));
    if (!have_header) {
      for (auto f : fields)
        table.header.emplace_back(trim(f));
      have_header = true;
      double probe = 0.0;
      const auto first = trim(fields.front());
      const auto res =
          std::from_chars(first.data(), first.data() + first.size(), probe);
      if (res.ec == std::errc() && res.ptr == first.data() + first.size())
        throw ParameterError(where + ": header row required");
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto raw : fields) {
      const auto f = trim(raw);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ParameterError(where + ": not a number: '" + std::string(f) + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header)
    throw ParameterError(path.string() + ": empty file, header row required");
  return table;
}

void write_text(const std::filesystem::path &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ParameterError(path.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw ParameterError(path.string() + ": write failed");
}

} // namespace mvfj::csv
