#include "ppx/kneser_ney.hpp"

#include <cmath>
#include <utility>

#include "ppx/error.hpp"
#include "ppx/tokenize.hpp"

namespace ppx {

std::size_t NGramKeyHash::operator()(std::span<const WordId> ngram) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (WordId id : ngram) {
    h ^= id;
    h *= 0x100000001b3ULL;
    h ^= h >> 31;
  }
  return static_cast<std::size_t>(h);
}

double absolute_discount(std::uint64_t n1, std::uint64_t n2) noexcept {
  if (n1 == 0 || n1 + 2 * n2 == 0) return kFallbackDiscount;
  const double d = static_cast<double>(n1) / (static_cast<double>(n1) + 2.0 * static_cast<double>(n2));
  return std::clamp(d, 0.0, kMaxDiscount);
}

std::uint64_t TrainingCounts::adjusted(std::span<const WordId> ngram) const {
  const auto k = ngram.size();
  if (k == 0 || k > static_cast<std::size_t>(order)) return 0;
  const NGramCounts& table =
      (k == static_cast<std::size_t>(order) || ngram[0] == Vocabulary::kBos) ? raw[k - 1] : continuation[k - 1];
  auto it = table.find(ngram);
  return it == table.end() ? 0 : it->second;
}

KneserNeyTrainer::KneserNeyTrainer(TrainOptions options) : options_(options) {
  if (options_.order < 1) throw ArgumentError("order must be >= 1");
  raw_.resize(static_cast<std::size_t>(options_.order));
  token_counts_.resize(vocab_.size(), 0);
}

void KneserNeyTrainer::add_line(std::span<const std::string_view> tokens) {
  scratch_.clear();
  scratch_.push_back(Vocabulary::kBos);
  for (auto tok : tokens) {
    WordId id = vocab_.insert(tok);
    if (id == Vocabulary::kBos || id == Vocabulary::kEos) id = Vocabulary::kUnk;
    if (id >= token_counts_.size()) token_counts_.resize(id + 1, 0);
    ++token_counts_[id];
    scratch_.push_back(id);
  }
  scratch_.push_back(Vocabulary::kEos);
  ++lines_;
  tokens_ += tokens.size();

  const std::span<const WordId> seq(scratch_);
  for (std::size_t k = 1; k <= raw_.size() && k <= seq.size(); ++k) {
    NGramCounts& table = raw_[k - 1];
    for (std::size_t i = 0; i + k <= seq.size(); ++i) {
      const auto window = seq.subspan(i, k);
      auto it = table.find(window);
      if (it != table.end())
        ++it->second;
      else
        table.emplace(std::vector<WordId>(window.begin(), window.end()), 1);
    }
  }
}

void KneserNeyTrainer::add_line(std::string_view line) {
  std::vector<std::string_view> tokens;
  split_tokens(line, tokens);
  add_line(tokens);
}

TrainingCounts KneserNeyTrainer::counts() const {
  if (lines_ == 0 || tokens_ == 0) throw TrainingError("training corpus has no tokens");

  TrainingCounts out;
  out.order = options_.order;
  const auto orders = static_cast<std::size_t>(options_.order);

  // Rare tokens collapse into <unk>; the remap keeps first-seen order.
  std::vector<WordId> remap(vocab_.size());
  for (WordId id = 0; id < vocab_.size(); ++id) {
    if (id < 3) {
      remap[id] = id;
    } else if (token_counts_[id] < options_.min_count) {
      remap[id] = Vocabulary::kUnk;
    } else {
      remap[id] = out.vocab.insert(vocab_.token(id));
    }
  }

  out.raw.resize(orders);
  std::vector<WordId> key;
  for (std::size_t k = 0; k < orders; ++k) {
    for (const auto& [ngram, count] : raw_[k]) {
      key.assign(ngram.begin(), ngram.end());
      for (auto& id : key) id = remap[id];
      out.raw[k][key] += count;
    }
  }

  out.continuation.resize(orders);
  for (std::size_t k = 1; k < orders; ++k) {
    for (const auto& [ngram, count] : out.raw[k]) {
      key.assign(ngram.begin() + 1, ngram.end());
      ++out.continuation[k - 1][key];
    }
  }

  out.n1.assign(orders, 0);
  out.n2.assign(orders, 0);
  out.discount.assign(orders, kFallbackDiscount);
  for (std::size_t k = 0; k < orders; ++k) {
    for (const auto& [ngram, count] : out.raw[k]) {
      if (k == 0 && ngram[0] == Vocabulary::kBos) continue;
      const std::uint64_t a = out.adjusted(ngram);
      if (a == 1) ++out.n1[k];
      if (a == 2) ++out.n2[k];
    }
    out.discount[k] = absolute_discount(out.n1[k], out.n2[k]);
  }
  return out;
}

NGramModel KneserNeyTrainer::build() const { return estimate_model(counts()); }

NGramModel estimate_model(const TrainingCounts& counts) {
  const int order = counts.order;
  NGramModel model(order, counts.vocab);
  const Vocabulary& vocab = counts.vocab;
  const auto predictable = static_cast<double>(vocab.size() - 1);

  // Unigrams: discounted adjusted counts interpolated with a uniform
  // distribution over every predictable word.
  {
    const double d = counts.discount[0];
    std::vector<double> adjusted(vocab.size(), 0.0);
    double total = 0.0;
    double seen = 0.0;
    for (WordId id = 0; id < vocab.size(); ++id) {
      if (id == Vocabulary::kBos) continue;
      const WordId unigram[1] = {id};
      adjusted[id] = static_cast<double>(counts.adjusted(unigram));
      total += adjusted[id];
      if (adjusted[id] > 0) seen += 1.0;
    }
    const double uniform = d * seen / total / predictable;
    std::vector<double> p(vocab.size(), 0.0);
    for (WordId id = 0; id < vocab.size(); ++id) {
      if (id == Vocabulary::kBos) continue;
      p[id] = std::max(adjusted[id] - d, 0.0) / total + uniform;
    }
    if (p[Vocabulary::kUnk] < kUnkProbFloor) {
      const double scale = (1.0 - kUnkProbFloor) / (1.0 - p[Vocabulary::kUnk]);
      for (auto& v : p) v *= scale;
      p[Vocabulary::kUnk] = kUnkProbFloor;
    }
    NGramTable& unigrams = model.table(1);
    unigrams.reserve(vocab.size());
    for (WordId id = 0; id < vocab.size(); ++id) {
      const WordId unigram[1] = {id};
      const double lp = id == Vocabulary::kBos ? kBosLog10Prob : std::min(0.0, std::log10(p[id]));
      unigrams.insert(unigram, {lp, 0.0});
    }
  }

  struct ContextStats {
    std::uint64_t total = 0;
    std::uint64_t types = 0;
  };

  for (int k = 2; k <= order; ++k) {
    const NGramCounts& raw = counts.raw[static_cast<std::size_t>(k - 1)];
    const double d = counts.discount[static_cast<std::size_t>(k - 1)];

    std::unordered_map<std::vector<WordId>, ContextStats, NGramKeyHash, NGramKeyEqual> contexts;
    for (const auto& [ngram, count] : raw) {
      auto& stats = contexts[std::vector<WordId>(ngram.begin(), ngram.end() - 1)];
      stats.total += counts.adjusted(ngram);
      stats.types += 1;
    }

    NGramTable& lower = model.table(k - 1);
    NGramTable& table = model.table(k);
    table.reserve(raw.size());
    for (const auto& [ngram, count] : raw) {
      const std::span<const WordId> g(ngram);
      const auto& stats = contexts.at(std::vector<WordId>(ngram.begin(), ngram.end() - 1));
      const double total = static_cast<double>(stats.total);
      const double gamma = d * static_cast<double>(stats.types) / total;
      const NGramEntry* lower_entry = lower.find(g.subspan(1));
      if (lower_entry == nullptr) throw TrainingError("missing lower-order n-gram during estimation");
      const double p = (static_cast<double>(counts.adjusted(g)) - d) / total +
                       gamma * std::pow(10.0, lower_entry->log10_prob);
      table.insert(g, {std::min(0.0, std::log10(p)), 0.0});
    }

    for (const auto& [context, stats] : contexts) {
      const NGramEntry* found = lower.find(context);
      if (found == nullptr) throw TrainingError("missing context n-gram during estimation");
      const double gamma = d * static_cast<double>(stats.types) / static_cast<double>(stats.total);
      // find() returns a const pointer into the table; re-insert to update.
      lower.insert(context, {found->log10_prob, std::log10(gamma)});
    }
  }
  return model;
}

NGramModel train_model(std::span<const std::string> lines, int order, std::uint64_t min_count) {
  KneserNeyTrainer trainer({order, min_count});
  for (const auto& line : lines) trainer.add_line(std::string_view(line));
  return trainer.build();
}

}  // namespace ppx
