#include "transport/handshake.hpp"

#include <charconv>

namespace mmsf::transport {

std::string format_hello(const Hello& h) {
  return "MMSF-CHAN " + h.channel + " " + std::to_string(h.index) + "/" + std::to_string(h.streams) + "\n";
}

std::optional<Hello> parse_hello(std::string_view line) {
  constexpr std::string_view kPrefix = "MMSF-CHAN ";
  if (line.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  line.remove_prefix(kPrefix.size());
  const auto space = line.find(' ');
  if (space == std::string_view::npos || space == 0) return std::nullopt;
  Hello h;
  h.channel = std::string(line.substr(0, space));
  auto rest = line.substr(space + 1);
  const auto slash = rest.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto parse_int = [](std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
  };
  if (!parse_int(rest.substr(0, slash), h.index) || !parse_int(rest.substr(slash + 1), h.streams)) {
    return std::nullopt;
  }
  if (h.streams < 1 || h.index < 0 || h.index >= h.streams) return std::nullopt;
  return h;
}

}  // namespace mmsf::transport
