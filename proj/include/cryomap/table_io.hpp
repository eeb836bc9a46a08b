#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Small helpers for the comma-delimited tables and text documents the
// toolkit reads and writes.
namespace cryomap::io {

std::vector<std::string> split(std::string_view line, char delim = ',');
std::string_view trim(std::string_view s);

/// Strict decimal parse of the whole field; throws BadNumber.
double parse_double(std::string_view field, std::string_view context = {});

/// Shortest text that round-trips a double exactly (17 significant digits).
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Reads delimited rows, skipping blank lines and lines starting with '#'.
/// Comment lines are returned separately (without the leading '#').
struct DelimitedText {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
DelimitedText read_delimited(std::istream& in, char delim = ',');

}  // namespace cryomap::io
