// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bip {

// Shortest round-trip decimal representation of a double ("%.17g" fallback
// via std::to_chars), locale independent, byte-stable across runs.
std::string format_double(double v);

// Parses a decimal floating point literal; throws DomainError on junk.
double parse_double(const std::string& s);

// Splits one CSV line on commas (no quoting; the library never emits quoted
// fields).
std::vector<std::string> split_csv_line(const std::string& line);

// Reads all nonempty lines of a text file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// A CSV file parsed into a header row plus data rows (no quoting rules; cells
// are raw strings).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of the named column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

// Parses a CSV file whose first nonempty line is the header.  Throws
// DomainError on an unreadable file or a row whose width disagrees with the
// header.
CsvTable read_csv_table(const std::filesystem::path& path);

// Writes `text` to `path`, creating parent directories as needed.
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace bip
