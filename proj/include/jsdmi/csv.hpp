#pragma once

// Minimal comma-separated I/O for the numeric files the benchmark writes.
// Fields never contain commas or quotes, so no quoting is performed.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace jsdmi {

/// Shortest decimal that round-trips to the same double; "inf", "-inf" and
/// "nan" for non-finite values.
std::string format_number(double x);

/// Inverse of format_number. Throws std::invalid_argument on malformed input.
double parse_number(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace jsdmi
