#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace phasecal {

// `key = value` lines; blank lines and `#` comments skipped. Keys keep file
// order. Throws ParseError on a line without '=' or with an empty key.
std::vector<std::pair<std::string, std::string>> load_kv_file(const std::filesystem::path& path);

// Sorted `key = value` lines.
std::string render_kv(const std::map<std::string, std::string>& values);

}  // namespace phasecal
