#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ppx {

using WordId = std::uint32_t;

/// Token <-> id map with the three sentinels at fixed ids.
class Vocabulary {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";

  Vocabulary();

  /// Adds `token` if absent; returns its id either way.
  WordId insert(std::string_view token);

  std::optional<WordId> lookup(std::string_view token) const;

  /// Id for a token read from raw text: unknown words and literal
  /// sentinel strings inside text both map to UNK.
  WordId text_id(std::string_view token) const {
    auto it = ids_.find(token);
    if (it == ids_.end() || it->second == kBos || it->second == kEos) return kUnk;
    return it->second;
  }

  const std::string& token(WordId id) const { return tokens_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId, Hash, std::equal_to<>> ids_;
};

}  // namespace ppx
