#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fpats::csv {

std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);
// Parses one record; fields may be double-quoted with "" escapes.
std::vector<std::string> parse_row(std::string_view line);
// Reads all non-empty lines of a CSV document.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace fpats::csv
