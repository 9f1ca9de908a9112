// SPDX-License-Identifier: Apache-2.0
#include "bip/csv.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "bip/errors.hpp"

namespace bip {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{}) {
    throw DomainError("csv: cannot parse number from '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("csv: no column named '" + name + "'");
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DomainError("csv: empty file: " + path.string());
  CsvTable table;
  table.header = split_csv_line(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> row = split_csv_line(lines[i]);
    if (row.size() != table.header.size()) {
      throw DomainError("csv: row " + std::to_string(i) + " has " +
                        std::to_string(row.size()) + " fields, header has " +
                        std::to_string(table.header.size()) + ": " +
                        path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + path.string());
  out << text;
  if (!out) throw DomainError("short write: " + path.string());
}

}  // namespace bip
