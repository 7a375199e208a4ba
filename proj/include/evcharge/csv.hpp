#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evcharge::csv {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split(std::string_view line);

// Trims ASCII whitespace and a trailing '\r'.
std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Fixed-precision formatting for report outputs.
std::string format_fixed(double v, int decimals);

// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace evcharge::csv
