#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "depth/core.hpp"

namespace depth {

// CSV dialect: comma separator, decimal point, optional single header row
// auto-detected by a non-numeric first row, no locale handling. Doubles are
// written with 17 significant digits so round trips are bit-exact.

inline std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

namespace detail {

inline bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' ||
                         *(end - 1) == '\r')) {
    --end;
  }
  if (begin == end) return false;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
  while (end > begin &&
         (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) {
    --end;
  }
  return s.substr(begin, end - begin);
}

}  // namespace detail

/// A parsed CSV file: optional header names plus a numeric table
/// (0 x 0 when the file holds no data rows).
struct CsvTable {
  std::vector<std::string> header;
  Matrix values{0, 0};

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  /// Index of a named column, or -1.
  Index column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<Index>(j);
    }
    return -1;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path + ": cannot open file");
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t line_number = 0;
  Index width = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') continue;  // comment / summary footer
    const std::vector<std::string> cells = detail::split_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    std::size_t bad_cell = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!detail::parse_double(cells[j], row[j])) {
        numeric = false;
        bad_cell = j;
        break;
      }
    }
    if (first_content_line) {
      first_content_line = false;
      if (!numeric) {  // header row
        table.header.reserve(cells.size());
        for (const std::string& cell : cells) {
          table.header.push_back(detail::trim(cell));
        }
        width = static_cast<Index>(cells.size());
        continue;
      }
    }
    if (!numeric) {
      throw CsvError(path + ":" + std::to_string(line_number) +
                     ": cell '" + detail::trim(cells[bad_cell]) +
                     "' is not a number");
    }
    if (width < 0) width = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != width) {
      throw CsvError(path + ":" + std::to_string(line_number) +
                     ": expected " + std::to_string(width) + " cells, found " +
                     std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    table.values = Matrix(0, std::max<Index>(width, 0));
    return table;
  }
  table.values = Matrix(static_cast<Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < width; ++j) {
      table.values(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return table;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DepthError(path + ": cannot open file for writing");
  out << content;
  if (!out) throw DepthError(path + ": write failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::string render_csv(const std::vector<std::string>& header,
                              const Matrix& values) {
  std::ostringstream out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j == 0 ? "" : ",") << header[j];
  }
  if (!header.empty()) out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      out << (j == 0 ? "" : ",") << format_double(values(i, j));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const Matrix& values) {
  write_text_file(path, render_csv(header, values));
}

}  // namespace depth
