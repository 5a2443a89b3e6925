#include "ppx/vocabulary.hpp"

namespace ppx {

Vocabulary::Vocabulary() {
  insert(kUnkToken);
  insert(kBosToken);
  insert(kEosToken);
}

WordId Vocabulary::insert(std::string_view token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<WordId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::lookup(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

}  // namespace ppx
