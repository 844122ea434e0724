#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace regscope {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);
bool istarts_with_ascii(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);

/// Splits one CSV record. Double-quoted fields may contain the separator and
/// doubled quotes.
std::vector<std::string> split_csv(std::string_view line);
std::string csv_escape(std::string_view field);

/// Reads a whole file; throws Error{Io} when unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

/// Splits file content into lines, tolerating CRLF and a missing final newline.
std::vector<std::string> read_lines(const std::string& path);

/// Shortest round-trip decimal rendering of a double (stable across runs).
std::string format_double(double v);

/// FNV-1a 64-bit, used for config digests.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

} // namespace regscope
