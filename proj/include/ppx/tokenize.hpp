#pragma once

#include <string_view>
#include <vector>

namespace ppx {

/// Byte length of the Unicode White_Space code point starting at `pos`
/// (UTF-8), or 0 if there is none.
std::size_t whitespace_length(std::string_view text, std::size_t pos) noexcept;

/// Splits on runs of Unicode whitespace. No normalization of any kind.
/// Appends views into `text` to `out` (cleared first).
void split_tokens(std::string_view text, std::vector<std::string_view>& out);

inline std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  split_tokens(text, out);
  return out;
}

/// Splits on '\n' only, keeping empty lines (a trailing "\n" yields a final empty line).
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace ppx
