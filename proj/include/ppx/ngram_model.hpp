#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ppx/vocabulary.hpp"

namespace ppx {

/// One stored n-gram: conditional probability and the backoff weight it
/// carries when used as a context. Both in log10.
struct NGramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;
};

/// Open-addressing hash table of fixed-length n-grams.
class NGramTable {
 public:
  explicit NGramTable(int order);

  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Inserts `ngram` or overwrites its entry; returns the entry's index.
  std::size_t insert(std::span<const WordId> ngram, const NGramEntry& entry);

  const NGramEntry* find(std::span<const WordId> ngram) const noexcept;

  std::span<const WordId> ngram(std::size_t index) const noexcept {
    return {words_.data() + index * static_cast<std::size_t>(order_),
            static_cast<std::size_t>(order_)};
  }
  const NGramEntry& entry(std::size_t index) const noexcept { return entries_[index]; }
  NGramEntry& entry(std::size_t index) noexcept { return entries_[index]; }

  void reserve(std::size_t count);

 private:
  // A slot packs the entry index (low 32 bits) with the high half of the
  // n-gram hash, so most misses never touch words_.
  static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

  std::size_t slot_of(std::span<const WordId> ngram, std::uint64_t hash) const noexcept;
  void rehash(std::size_t slot_count);

  int order_;
  std::vector<WordId> words_;
  std::vector<NGramEntry> entries_;
  std::vector<std::uint64_t> slots_;
};

/// log10 probability returned when even the unigram of a word is missing
/// (e.g. a hand-written model without <unk>).
inline constexpr double kMissingLog10Prob = -100.0;

/// log10 probability stored for the <s> unigram, which is never predicted.
inline constexpr double kBosLog10Prob = -99.0;

/// Immutable-after-construction backoff language model. Queries are
/// const and safe to run concurrently.
class NGramModel {
 public:
  NGramModel(int order, Vocabulary vocab);

  int order() const noexcept { return static_cast<int>(tables_.size()); }
  const Vocabulary& vocab() const noexcept { return vocab_; }

  /// Table of n-grams of length `n` (1-based).
  const NGramTable& table(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)); }
  NGramTable& table(int n) { return tables_.at(static_cast<std::size_t>(n - 1)); }

  /// log10 p(word | context) by longest-match backoff. `context` is ordered
  /// oldest first and must hold at most order()-1 ids.
  double log10_prob(WordId word, std::span<const WordId> context) const;
  double prob(WordId word, std::span<const WordId> context) const;

  /// Same query with the word as the last element of `ngram`.
  double log10_prob_ngram(std::span<const WordId> ngram) const noexcept;

  /// Sum of log10 probabilities of every token and </s>, with <s> as the
  /// initial context. `tokens` are raw text tokens.
  double score_line(std::span<const std::string_view> tokens) const;
  double score_line(std::string_view line) const;

  /// Same as score_line over already-mapped word ids (no sentinels).
  double score_ids(std::span<const WordId> ids) const;

  /// Copy restricted to the lowest `order` tables.
  NGramModel truncated(int order) const;

 private:
  Vocabulary vocab_;
  std::vector<NGramTable> tables_;
};

}  // namespace ppx
