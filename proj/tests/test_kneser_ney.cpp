#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "kn_checks.hpp"
#include "kn_oracle.hpp"
#include "ppx/error.hpp"
#include "ppx/kneser_ney.hpp"
#include "test_util.hpp"

using namespace ppx;
using ppx::testing::KnOracle;
using ppx::testing::all_contexts;
using ppx::testing::ids_of;
using ppx::testing::max_oracle_error;


TEST_CASE("discount estimate and fallbacks") {
  CHECK(absolute_discount(4, 2) == doctest::Approx(0.5));
  CHECK(absolute_discount(3, 0) == doctest::Approx(kMaxDiscount));
  CHECK(absolute_discount(0, 5) == kFallbackDiscount);
  CHECK(absolute_discount(0, 0) == kFallbackDiscount);
}

TEST_CASE("unigram model over 'a a b' is normalized") {
  const NGramModel m = train_model(std::vector<std::string>{"a a b"}, 1);
  const auto& v = m.vocab();
  const double total = m.prob(*v.lookup("a"), {}) + m.prob(*v.lookup("b"), {}) + m.prob(Vocabulary::kEos, {}) +
                       m.prob(Vocabulary::kUnk, {});
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bigram toy corpus matches the brute-force oracle") {
  const std::vector<std::string> corpus{"a b", "a b", "b a"};
  const NGramModel m = train_model(corpus, 2);
  const KnOracle oracle(corpus, 2);
  for (const auto& ctx : all_contexts(oracle.words(), 2))
    for (const auto& w : oracle.words())
      CHECK(m.prob(ids_of(m, {w})[0], ids_of(m, ctx)) == doctest::Approx(oracle.prob(ctx, w)).epsilon(1e-9));

  // prob(a | b), pinned from the oracle.
  const double p_a_b = oracle.prob({"b"}, "a");
  CHECK(std::abs(m.prob(*m.vocab().lookup("a"), ids_of(m, {"b"})) - p_a_b) < 1e-9);
}

TEST_CASE("single repeated token, order 2") {
  const NGramModel m = train_model(std::vector<std::string>{"t t t", "t"}, 2);
  const WordId t = *m.vocab().lookup("t");
  const WordId ctx[1] = {t};
  const double total = m.prob(t, ctx) + m.prob(Vocabulary::kEos, ctx) + m.prob(Vocabulary::kUnk, ctx);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("randomized corpora agree with the oracle") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 24; ++trial) {
    const int order = 1 + trial % 3;
    const auto corpus = ppx::testing::random_corpus(rng, 30, 1 + trial % 8);
    CAPTURE(trial);
    CHECK(max_oracle_error(corpus, order) < 1e-9);
  }
}

TEST_CASE("normalization over every stored context") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 12; ++trial) {
    const int order = 1 + trial % 3;
    const auto corpus = ppx::testing::random_corpus(rng, 30, 8);
    const NGramModel m = train_model(corpus, order);
    for (int n = 1; n < order + 1; ++n) {
      const auto& table = m.table(n);
      if (n == order) break;  // contexts have length <= order - 1
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto ctx = table.ngram(i);
        double total = 0.0;
        for (WordId w = 0; w < m.vocab().size(); ++w)
          if (w != Vocabulary::kBos) total += m.prob(w, ctx);
        CHECK(std::abs(total - 1.0) < 1e-6);
      }
    }
    double total = 0.0;
    for (WordId w = 0; w < m.vocab().size(); ++w)
      if (w != Vocabulary::kBos) total += m.prob(w, {});
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("continuation counts equal distinct left extensions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const auto corpus = ppx::testing::random_corpus(rng, 20, 5);
    KneserNeyTrainer trainer({3, 1});
    for (const auto& line : corpus) trainer.add_line(std::string_view(line));
    const TrainingCounts counts = trainer.counts();
    const KnOracle oracle(corpus, 3);
    for (int k = 1; k < 3; ++k) {
      for (const auto& [ngram, n] : counts.continuation[static_cast<std::size_t>(k - 1)]) {
        std::vector<std::string> g;
        for (WordId id : ngram) g.push_back(counts.vocab.token(id));
        CHECK(n == oracle.left_extensions(g));
      }
    }
    for (int k = 1; k <= 3; ++k) {
      const double d = counts.discount[static_cast<std::size_t>(k - 1)];
      CHECK(d >= 0.0);
      CHECK(d < 1.0);
      CHECK(d == doctest::Approx(oracle.discount_for(k)));
    }
  }
}

TEST_CASE("every stored n-gram has a stored suffix and context") {
  std::mt19937_64 rng(5);
  const auto corpus = ppx::testing::random_corpus(rng, 30, 8);
  const NGramModel m = train_model(corpus, 3);
  for (int n = 2; n <= 3; ++n) {
    const auto& table = m.table(n);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto g = table.ngram(i);
      CHECK(m.table(n - 1).find(g.subspan(1)) != nullptr);
      CHECK(m.table(n - 1).find(g.first(g.size() - 1)) != nullptr);
      CHECK(table.entry(i).log10_prob <= 0.0);
      CHECK(std::isfinite(table.entry(i).log10_backoff));
    }
  }
  CHECK(m.prob(Vocabulary::kUnk, {}) > 0.0);
}

TEST_CASE("unk floor applies when interpolation leaves too little mass") {
  // Mostly doubletons push the discount towards 0, so the uniform share of
  // <unk> drops under the floor.
  std::vector<std::string> corpus;
  for (int i = 0; i < 1000; ++i) {
    std::string line = "v" + std::to_string(i) + " v" + std::to_string(i);
    for (int j = 0; j < 20; ++j) line += " x";
    corpus.push_back(line);
  }
  corpus.push_back("y");
  const NGramModel m = train_model(corpus, 1);
  CHECK(m.prob(Vocabulary::kUnk, {}) == doctest::Approx(kUnkProbFloor).epsilon(1e-9));
  double total = 0.0;
  for (WordId w = 0; w < m.vocab().size(); ++w)
    if (w != Vocabulary::kBos) total += m.prob(w, {});
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("min-count maps rare tokens to <unk>") {
  const std::vector<std::string> corpus{"a a a b", "a c"};
  KneserNeyTrainer trainer({2, 2});
  for (const auto& line : corpus) trainer.add_line(std::string_view(line));
  const NGramModel m = trainer.build();
  CHECK(m.vocab().lookup("a").has_value());
  CHECK_FALSE(m.vocab().lookup("b").has_value());
  CHECK_FALSE(m.vocab().lookup("c").has_value());
  // Equivalent to training on the corpus with <unk> written out.
  const NGramModel ref = train_model(std::vector<std::string>{"a a a <unk>", "a <unk>"}, 2);
  const WordId a = *m.vocab().lookup("a");
  const WordId ctx[1] = {a};
  CHECK(m.prob(Vocabulary::kUnk, ctx) == doctest::Approx(ref.prob(Vocabulary::kUnk, ctx)).epsilon(1e-12));
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_model(std::vector<std::string>{}, 3), TrainingError);
  CHECK_THROWS_AS(train_model(std::vector<std::string>{"", "  "}, 3), TrainingError);
  CHECK_THROWS_AS(train_model(std::vector<std::string>{"a"}, 0), ArgumentError);
}

TEST_CASE("order above the longest line trains with empty high orders") {
  const NGramModel m = train_model(std::vector<std::string>{"a b c"}, 7);
  CHECK(m.order() == 7);
  CHECK(m.table(6).size() == 0);
  CHECK(m.table(5).size() == 1);
  const NGramModel m2 = train_model(std::vector<std::string>{"x"}, 5);
  CHECK(m2.table(4).size() == 0);
}
