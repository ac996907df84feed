#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fpats {

std::string read_file(const std::filesystem::path& path);
// Writes atomically: content goes to a sibling temp file that is then renamed.
void write_file(const std::filesystem::path& path, std::string_view content);
// Regular files under dir with the given extension, sorted by filename.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::string_view extension);

}  // namespace fpats
