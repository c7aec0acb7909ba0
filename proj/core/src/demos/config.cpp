#include <fstream>
#include <sstream>

#include "mmsf/demos/demos.hpp"

namespace mmsf::demos {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config parse_config(std::string_view text) {
  Config out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    if (key.find_first_of(" \t") != std::string::npos) throw ConfigError(lineno, "key '" + key + "' contains blanks");
    if (!out.emplace(key, value).second) throw ConfigError(lineno, "duplicate key '" + key + "'");
  }
  return out;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Config merge(Config base, const Config& over) {
  for (const auto& [k, v] : over) base[k] = v;
  return base;
}

}  // namespace mmsf::demos
