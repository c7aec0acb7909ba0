#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmsf::mml::xml {

// Minimal element tree: enough XML for the xMML dialect (declaration,
// comments, attributes, nested and self-closing elements, the five
// predefined entities and numeric character references). Text content is
// kept but the dialect never uses it.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;
  std::size_t line = 0;

  const std::string* attribute(std::string_view key) const;
};

// Throws SyntaxError carrying the 1-based line of the first problem.
Element parse(std::string_view text);

std::string escape(std::string_view raw);

}  // namespace mmsf::mml::xml
