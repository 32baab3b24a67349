#pragma once

// Minimal numeric CSV: header row, comma delimiter, decimal point, no quoting.

#include "robstat/datamodel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace robstat::cli {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> names;
  Matrix values;

  Index column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<Index>(j);
    return -1;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty input: expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto& h : split_line(line)) t.names.push_back(trim(h));

  const std::size_t p = t.names.size();
  std::vector<double> cells;
  Index rows = 0;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    ++rows;
    if (fields.size() != p) {
      throw CsvError("row " + std::to_string(rows) + " (line " + std::to_string(lineno) + ") has " +
                     std::to_string(fields.size()) + " fields, expected " + std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      const std::string cell = trim(fields[j]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw CsvError("row " + std::to_string(rows) + " (line " + std::to_string(lineno) + "), column " +
                       std::to_string(j + 1) + " (" + t.names[j] + "): cannot parse '" + cell + "' as a finite number");
      }
      cells.push_back(v);
    }
  }
  if (rows == 0) throw CsvError("no data rows");
  t.values.resize(rows, static_cast<Index>(p));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < static_cast<Index>(p); ++j)
      t.values(i, j) = cells[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)];
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace robstat::cli
