#include "ppx/tokenize.hpp"

namespace ppx {

std::size_t whitespace_length(std::string_view text, std::size_t pos) noexcept {
  const auto at = [&](std::size_t i) -> unsigned char {
    return i < text.size() ? static_cast<unsigned char>(text[i]) : 0;
  };
  const unsigned char c = at(pos);
  if (c < 0x80) return (c == ' ' || (c >= '\t' && c <= '\r')) ? 1 : 0;
  switch (c) {
    case 0xC2:  // U+0085, U+00A0
      return (at(pos + 1) == 0x85 || at(pos + 1) == 0xA0) ? 2 : 0;
    case 0xE1:  // U+1680
      return (at(pos + 1) == 0x9A && at(pos + 2) == 0x80) ? 3 : 0;
    case 0xE2: {
      const unsigned char c1 = at(pos + 1);
      const unsigned char c2 = at(pos + 2);
      if (c1 == 0x80) {
        // U+2000..U+200A, U+2028, U+2029, U+202F
        if ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9 || c2 == 0xAF) return 3;
      } else if (c1 == 0x81 && c2 == 0x9F) {  // U+205F
        return 3;
      }
      return 0;
    }
    case 0xE3:  // U+3000
      return (at(pos + 1) == 0x80 && at(pos + 2) == 0x80) ? 3 : 0;
    default:
      return 0;
  }
}

void split_tokens(std::string_view text, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t ws = whitespace_length(text, i);
    if (ws > 0) {
      if (in_token) out.push_back(text.substr(start, i - start));
      in_token = false;
      i += ws;
    } else {
      if (!in_token) {
        start = i;
        in_token = true;
      }
      ++i;
    }
  }
  if (in_token) out.push_back(text.substr(start));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace ppx
