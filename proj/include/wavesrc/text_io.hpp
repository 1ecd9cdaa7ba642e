#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wavesrc::text {

// Shortest round-trip decimal for doubles; %.{digits}g when digits > 0.
std::string format_double(double v, int digits = 0);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);
double parse_double(std::string_view s);  // throws ValidationError
// Numbers separated by whitespace and/or commas.
std::vector<double> parse_numbers(std::string_view s);

std::string read_file(const std::string& path);
// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace wavesrc::text
