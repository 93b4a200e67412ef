#include "phasecal/kv_config.hpp"

#include "phasecal/error.hpp"
#include "text_io.hpp"

namespace phasecal {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> load_kv_file(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& line : detail::read_data_lines(path)) {
    const auto eq = line.text.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line.number, "expected key = value");
    auto key = trim(line.text.substr(0, eq));
    if (key.empty()) throw ParseError(path.string(), line.number, "empty key");
    out.emplace_back(std::move(key), trim(line.text.substr(eq + 1)));
  }
  return out;
}

std::string render_kv(const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

}  // namespace phasecal
