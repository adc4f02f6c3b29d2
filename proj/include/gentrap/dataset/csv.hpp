#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gentrap/error.hpp"

namespace gentrap::data {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Header-bearing delimited text, fully materialised as strings.
struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& col) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == col) return i;
    throw SchemaError("table '" + name + "' is missing required column '" + col + "'");
  }
};

inline std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::istream& is, const std::string& name, char delim = ',') {
  CsvTable t;
  t.name = name;
  std::string line;
  if (!std::getline(is, line)) return t;  // empty file -> empty table
  t.header = split_line(line, delim);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line, delim);
    if (fields.size() != t.header.size())
      throw SchemaError("table '" + name + "' line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline CsvTable read_csv(const std::string& path, const std::string& name, char delim = ',') {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + name + " file: " + path);
  return parse_csv(is, name, delim);
}

/// Numeric cell, or kMissing for empty / non-numeric content.
inline double parse_number(std::string_view cell) {
  if (cell.empty()) return kMissing;
  double v = 0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) return kMissing;
  return v;
}

/// Shortest round-trip decimal; missing values print as an empty cell.
inline std::string format_number(double v) {
  if (is_missing(v)) return {};
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path, std::ios::binary), path_(path) {
    if (!os_) throw DataError("cannot open for writing: " + path);
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << fields[i];
    }
    os_ << '\n';
  }

  void close() {
    os_.close();
    if (!os_) throw DataError("failed writing " + path_);
  }

 private:
  std::ofstream os_;
  std::string path_;
};

}  // namespace gentrap::data
