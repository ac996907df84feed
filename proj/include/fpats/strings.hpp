#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fpats {

std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view text, std::string_view prefix);
std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace fpats
