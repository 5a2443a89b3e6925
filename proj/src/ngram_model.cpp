#include "ppx/ngram_model.hpp"

#include <cmath>
#include <utility>

#include "ppx/error.hpp"
#include "ppx/tokenize.hpp"

namespace ppx {
namespace {

inline std::uint64_t mix(std::uint64_t h) noexcept {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

inline std::uint64_t hash_ngram(std::span<const WordId> ngram) noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL * (ngram.size() + 1);
  for (WordId id : ngram) h = (h ^ id) * 0x100000001B3ULL + (h >> 29);
  return mix(h);
}

inline bool same(std::span<const WordId> a, std::span<const WordId> b) noexcept {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline std::uint64_t slot_tag(std::uint64_t hash) noexcept { return hash & 0xFFFFFFFF00000000ULL; }
inline std::uint32_t slot_index(std::uint64_t slot) noexcept { return static_cast<std::uint32_t>(slot); }

}  // namespace

NGramTable::NGramTable(int order) : order_(order), slots_(16, kEmpty) {
  if (order < 1) throw ArgumentError("n-gram table order must be >= 1");
}

void NGramTable::reserve(std::size_t count) {
  words_.reserve(count * static_cast<std::size_t>(order_));
  entries_.reserve(count);
  std::size_t want = 16;
  while (want < count * 2) want <<= 1;
  if (want > slots_.size()) rehash(want);
}

std::size_t NGramTable::slot_of(std::span<const WordId> ngram, std::uint64_t hash) const noexcept {
  const std::size_t mask = slots_.size() - 1;
  const std::uint64_t tag = slot_tag(hash);
  std::size_t slot = static_cast<std::size_t>(hash) & mask;
  while (true) {
    const std::uint64_t v = slots_[slot];
    if (v == kEmpty || (slot_tag(v) == tag && same(this->ngram(slot_index(v)), ngram))) return slot;
    slot = (slot + 1) & mask;
  }
}

void NGramTable::rehash(std::size_t slot_count) {
  slots_.assign(slot_count, kEmpty);
  const std::size_t mask = slot_count - 1;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const std::uint64_t hash = hash_ngram(ngram(i));
    std::size_t slot = static_cast<std::size_t>(hash) & mask;
    while (slots_[slot] != kEmpty) slot = (slot + 1) & mask;
    slots_[slot] = slot_tag(hash) | i;
  }
}

std::size_t NGramTable::insert(std::span<const WordId> ngram, const NGramEntry& entry) {
  if (ngram.size() != static_cast<std::size_t>(order_))
    throw ArgumentError("n-gram length does not match table order");
  if (entries_.size() >= 0xFFFFFFFEu) throw ArgumentError("n-gram table is full");
  const std::uint64_t hash = hash_ngram(ngram);
  std::size_t slot = slot_of(ngram, hash);
  if (slots_[slot] != kEmpty) {
    entries_[slot_index(slots_[slot])] = entry;
    return slot_index(slots_[slot]);
  }
  if ((entries_.size() + 1) * 2 > slots_.size()) {
    rehash(slots_.size() * 2);
    slot = slot_of(ngram, hash);
  }
  const std::size_t index = entries_.size();
  words_.insert(words_.end(), ngram.begin(), ngram.end());
  entries_.push_back(entry);
  slots_[slot] = slot_tag(hash) | index;
  return index;
}

const NGramEntry* NGramTable::find(std::span<const WordId> ngram) const noexcept {
  if (ngram.size() != static_cast<std::size_t>(order_)) return nullptr;
  const std::uint64_t v = slots_[slot_of(ngram, hash_ngram(ngram))];
  return v == kEmpty ? nullptr : &entries_[slot_index(v)];
}

NGramModel::NGramModel(int order, Vocabulary vocab) : vocab_(std::move(vocab)) {
  if (order < 1) throw ArgumentError("model order must be >= 1");
  tables_.reserve(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n) tables_.emplace_back(n);
}

double NGramModel::log10_prob_ngram(std::span<const WordId> ngram) const noexcept {
  // Longest stored suffix of the n-gram wins; every longer context that is
  // stored but lacks the word contributes its backoff weight.
  const std::size_t context_len = ngram.size() - 1;
  double backoff = 0.0;
  for (std::size_t len = context_len + 1; len >= 1; --len) {
    const auto suffix = ngram.subspan(ngram.size() - len);
    if (const NGramEntry* e = tables_[len - 1].find(suffix)) return e->log10_prob + backoff;
    if (len > 1) {
      const auto context = suffix.first(len - 1);
      if (const NGramEntry* c = tables_[len - 2].find(context)) backoff += c->log10_backoff;
    }
  }
  return kMissingLog10Prob + backoff;
}

double NGramModel::log10_prob(WordId word, std::span<const WordId> context) const {
  if (context.size() + 1 > tables_.size())
    throw ArgumentError("context longer than model order - 1");
  if (word == Vocabulary::kBos) throw ArgumentError("<s> cannot be predicted");
  if (word >= vocab_.size()) word = Vocabulary::kUnk;
  std::vector<WordId> ngram(context.begin(), context.end());
  for (auto& id : ngram)
    if (id >= vocab_.size()) id = Vocabulary::kUnk;
  ngram.push_back(word);
  return log10_prob_ngram(ngram);
}

double NGramModel::prob(WordId word, std::span<const WordId> context) const {
  return std::pow(10.0, log10_prob(word, context));
}

double NGramModel::score_ids(std::span<const WordId> ids) const {
  thread_local std::vector<WordId> padded;
  padded.clear();
  padded.reserve(ids.size() + 2);
  padded.push_back(Vocabulary::kBos);
  padded.insert(padded.end(), ids.begin(), ids.end());
  padded.push_back(Vocabulary::kEos);

  const std::size_t max_context = tables_.size() - 1;
  const std::span<const WordId> seq(padded);
  double total = 0.0;
  for (std::size_t j = 1; j < seq.size(); ++j) {
    const std::size_t start = j > max_context ? j - max_context : 0;
    total += log10_prob_ngram(seq.subspan(start, j - start + 1));
  }
  return total;
}

double NGramModel::score_line(std::span<const std::string_view> tokens) const {
  thread_local std::vector<WordId> ids;
  ids.clear();
  ids.reserve(tokens.size());
  for (auto tok : tokens) ids.push_back(vocab_.text_id(tok));
  return score_ids(ids);
}

double NGramModel::score_line(std::string_view line) const {
  thread_local std::vector<std::string_view> tokens;
  split_tokens(line, tokens);
  return score_line(tokens);
}

NGramModel NGramModel::truncated(int order) const {
  if (order < 1 || order > this->order()) throw ArgumentError("invalid truncation order");
  NGramModel out(order, vocab_);
  for (int n = 1; n <= order; ++n) out.tables_[static_cast<std::size_t>(n - 1)] = table(n);
  return out;
}

}  // namespace ppx
