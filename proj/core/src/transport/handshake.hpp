#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mmsf::transport {

// "MMSF-CHAN <channel-name> <stream-idx>/<k>"; the peer answers "OK" or
// "ERR <reason>".
struct Hello {
  std::string channel;
  int index = 0;
  int streams = 1;
};

std::string format_hello(const Hello& hello);
std::optional<Hello> parse_hello(std::string_view line);

inline constexpr std::string_view kHelloOk = "OK";

}  // namespace mmsf::transport
