#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ppx/ngram_model.hpp"
#include "ppx/vocabulary.hpp"

namespace ppx {

struct NGramKeyHash {
  using is_transparent = void;
  std::size_t operator()(std::span<const WordId> ngram) const noexcept;
  std::size_t operator()(const std::vector<WordId>& ngram) const noexcept {
    return (*this)(std::span<const WordId>(ngram));
  }
};

struct NGramKeyEqual {
  using is_transparent = void;
  template <class A, class B>
  bool operator()(const A& a, const B& b) const noexcept {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  }
};

using NGramCounts = std::unordered_map<std::vector<WordId>, std::uint64_t, NGramKeyHash, NGramKeyEqual>;

/// Floor applied to p(<unk>) when interpolation leaves it less mass.
inline constexpr double kUnkProbFloor = 1e-7;

/// Discount used when the count-of-counts cannot support an estimate.
inline constexpr double kFallbackDiscount = 0.5;
inline constexpr double kMaxDiscount = 0.999;

/// D = n1 / (n1 + 2 n2), with the fallback for degenerate counts and the clamp.
double absolute_discount(std::uint64_t n1, std::uint64_t n2) noexcept;

/// Intermediate counts for Kneser-Ney estimation. Index k-1 holds order k.
struct TrainingCounts {
  int order = 0;
  Vocabulary vocab;
  std::vector<NGramCounts> raw;
  /// Number of distinct one-word left extensions; filled for orders < `order`.
  std::vector<NGramCounts> continuation;
  std::vector<std::uint64_t> n1;
  std::vector<std::uint64_t> n2;
  std::vector<double> discount;

  /// Count used for estimation: raw at the highest order and for n-grams
  /// starting with <s> (they have no left context), continuation otherwise.
  std::uint64_t adjusted(std::span<const WordId> ngram) const;
};

struct TrainOptions {
  int order = 5;
  /// Tokens seen fewer than this many times become <unk> before counting.
  std::uint64_t min_count = 1;
};

/// Streaming accumulator of training lines; build() estimates the model.
class KneserNeyTrainer {
 public:
  explicit KneserNeyTrainer(TrainOptions options);

  void add_line(std::span<const std::string_view> tokens);
  void add_line(std::string_view line);

  std::uint64_t line_count() const noexcept { return lines_; }

  TrainingCounts counts() const;
  NGramModel build() const;

 private:
  TrainOptions options_;
  Vocabulary vocab_;
  std::vector<std::uint64_t> token_counts_;
  std::vector<NGramCounts> raw_;
  std::uint64_t lines_ = 0;
  std::uint64_t tokens_ = 0;
  std::vector<WordId> scratch_;
};

/// Interpolated Kneser-Ney with one discount per order, converted to
/// backoff form.
NGramModel estimate_model(const TrainingCounts& counts);

NGramModel train_model(std::span<const std::string> lines, int order, std::uint64_t min_count = 1);

}  // namespace ppx
