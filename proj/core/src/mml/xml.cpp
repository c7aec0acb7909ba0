#include "xml.hpp"

#include <cctype>
#include <charconv>

#include "mmsf/mml/model.hpp"

namespace mmsf::mml::xml {

const std::string* Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Element parse_document() {
    skip_misc();
    if (eof()) fail("document has no root element");
    Element root = parse_element();
    skip_misc();
    if (!eof()) fail("content after the root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(line_, what); }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && !eof(); ++i) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  void skip_until(std::string_view terminator, const char* what) {
    while (!eof() && !starts_with(terminator)) advance();
    if (eof()) fail(std::string("unterminated ") + what);
    advance(terminator.size());
  }

  // Declarations, processing instructions, comments and whitespace.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<!DOCTYPE")) {
        skip_until(">", "doctype");
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    if (!is_name_start(peek())) fail("expected a name");
    std::size_t start = pos_;
    while (!eof() && is_name_char(peek())) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  void decode_entity(std::string& out) {
    std::size_t end = text_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) fail("malformed entity reference");
    std::string_view ent = text_.substr(pos_ + 1, end - pos_ - 1);
    if (ent == "amp") out += '&';
    else if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (ent.starts_with("#")) {
      unsigned code = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      auto digits = ent.substr(hex ? 2 : 1);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
      if (ec != std::errc{} || p != digits.data() + digits.size()) fail("bad character reference");
      append_utf8(out, code);
    } else {
      fail("unknown entity &" + std::string(ent) + ";");
    }
    advance(end - pos_ + 1);
  }

  static void append_utf8(std::string& out, unsigned code) {
    if (code < 0x80) {
      out += static_cast<char>(code);
    } else if (code < 0x800) {
      out += static_cast<char>(0xC0 | (code >> 6));
      out += static_cast<char>(0x80 | (code & 0x3F));
    } else if (code < 0x10000) {
      out += static_cast<char>(0xE0 | (code >> 12));
      out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (code & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (code >> 18));
      out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (code & 0x3F));
    }
  }

  std::string parse_attribute_value() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
    advance();
    std::string value;
    while (!eof() && peek() != quote) {
      if (peek() == '<') fail("'<' inside attribute value");
      if (peek() == '&') {
        decode_entity(value);
      } else {
        value += peek();
        advance();
      }
    }
    if (eof()) fail("unterminated attribute value");
    advance();
    return value;
  }

  Element parse_element() {
    if (peek() != '<') fail("expected '<'");
    Element el;
    el.line = line_;
    advance();
    el.name = parse_name();
    for (;;) {
      bool had_ws = !eof() && std::isspace(static_cast<unsigned char>(peek()));
      skip_ws();
      if (eof()) fail("unterminated start tag <" + el.name + ">");
      if (starts_with("/>")) {
        advance(2);
        return el;
      }
      if (peek() == '>') {
        advance();
        break;
      }
      if (!had_ws) fail("expected whitespace before attribute in <" + el.name + ">");
      std::size_t attr_line = line_;
      std::string key = parse_name();
      if (el.attribute(key)) throw SyntaxError(attr_line, "duplicate attribute '" + key + "'");
      skip_ws();
      if (peek() != '=') fail("expected '=' after attribute '" + key + "'");
      advance();
      skip_ws();
      el.attributes.emplace_back(std::move(key), parse_attribute_value());
    }
    // Content.
    for (;;) {
      if (eof()) fail("missing end tag </" + el.name + ">");
      if (starts_with("</")) {
        advance(2);
        std::string closing = parse_name();
        if (closing != el.name) fail("mismatched end tag </" + closing + "> for <" + el.name + ">");
        skip_ws();
        if (peek() != '>') fail("malformed end tag </" + closing + ">");
        advance();
        return el;
      }
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<![CDATA[")) {
        advance(9);
        std::size_t start = pos_;
        skip_until("]]>", "CDATA section");
        el.text += text_.substr(start, pos_ - start - 3);
      } else if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (peek() == '<') {
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        decode_entity(el.text);
      } else {
        el.text += peek();
        advance();
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

Element parse(std::string_view text) { return Parser(text).parse_document(); }

std::string escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace mmsf::mml::xml
