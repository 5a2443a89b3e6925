#include <random>
#include <sstream>

#include "doctest.h"
#include "ppx/arpa.hpp"
#include "ppx/error.hpp"
#include "ppx/kneser_ney.hpp"
#include "test_util.hpp"

using namespace ppx;

namespace {

std::string to_arpa(const NGramModel& m) {
  std::ostringstream out;
  write_arpa(m, out);
  return out.str();
}

NGramModel from_arpa(const std::string& text) {
  std::istringstream in(text);
  return read_arpa(in);
}

}  // namespace

TEST_CASE("round trip preserves every stored value bit-exactly") {
  std::mt19937_64 rng(42);
  for (int order = 1; order <= 3; ++order) {
    const auto corpus = ppx::testing::random_corpus(rng, 30, 8);
    const NGramModel m = train_model(corpus, order);
    const NGramModel back = from_arpa(to_arpa(m));
    REQUIRE(back.order() == m.order());
    REQUIRE(back.vocab().size() == m.vocab().size());
    for (int n = 1; n <= order; ++n) {
      REQUIRE(back.table(n).size() == m.table(n).size());
      for (std::size_t i = 0; i < m.table(n).size(); ++i) {
        std::vector<WordId> remapped;
        for (WordId id : m.table(n).ngram(i)) remapped.push_back(*back.vocab().lookup(m.vocab().token(id)));
        const NGramEntry* e = back.table(n).find(remapped);
        REQUIRE(e != nullptr);
        CHECK(e->log10_prob == m.table(n).entry(i).log10_prob);
        if (n < order) CHECK(e->log10_backoff == m.table(n).entry(i).log10_backoff);
      }
    }
    // Identical bytes when written again.
    CHECK(to_arpa(back) == to_arpa(m));
    for (const auto& line : corpus) CHECK(back.score_line(std::string_view(line)) == m.score_line(std::string_view(line)));
  }
}

TEST_CASE("numbers keep at least seven significant digits") {
  CHECK(format_log10(-0.5) == "-0.5000000");
  CHECK(format_log10(-99.0) == "-99.00000");
  CHECK(format_log10(-0.30102999566398120) == "-0.3010299956639812");
}

TEST_CASE("minimal hand-written file") {
  const std::string text =
      "\\data\\\n"
      "ngram 1=4\n"
      "\n"
      "\\1-grams:\n"
      "-0.6020600\t<unk>\n"
      "-0.6020600\t<s>\n"
      "-0.3010300\thola\n"
      "-0.6020600\t</s>\n"
      "\n"
      "\\end\\\n";
  const NGramModel m = from_arpa(text);
  CHECK(m.order() == 1);
  CHECK(m.table(1).size() == 4);
  const WordId hola[1] = {*m.vocab().lookup("hola")};
  CHECK(m.table(1).find(hola)->log10_prob == -0.30103);
  CHECK(m.score_line(std::string_view("hola")) == doctest::Approx(-0.30103 - 0.60206));
}

TEST_CASE("space-separated files from other toolkits load") {
  const std::string text =
      "\\data\\\nngram 1=3\nngram 2=1\n\n\\1-grams:\n-1.0 <s> -0.5\n-0.5 a -0.2\n-0.3 </s>\n\n"
      "\\2-grams:\n-0.1 <s> a\n\n\\end\\\n";
  const NGramModel m = from_arpa(text);
  const WordId ctx[1] = {Vocabulary::kBos};
  CHECK(m.log10_prob(*m.vocab().lookup("a"), ctx) == doctest::Approx(-0.1));
  CHECK(m.log10_prob(Vocabulary::kEos, ctx) == doctest::Approx(-0.5 - 0.3));
  // No <unk> entry: unknown words get the fixed floor.
  CHECK(m.log10_prob(Vocabulary::kUnk, {}) == kMissingLog10Prob);
}

TEST_CASE("malformed files") {
  const std::string body = "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\t<unk>\n-0.3\t</s>\n";
  SUBCASE("missing end marker") {
    try {
      from_arpa(body);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 6);
    }
  }
  SUBCASE("count mismatch") { CHECK_THROWS_AS(from_arpa("\\data\\\nngram 1=3\n\n\\1-grams:\n-0.3\t<unk>\n\\end\\\n"), FormatError); }
  SUBCASE("section beyond declared order") {
    CHECK_THROWS_AS(from_arpa(body + "\n\\2-grams:\n-0.1\t<unk> </s>\n\\end\\\n"), FormatError);
  }
  SUBCASE("bad number reports its line") {
    try {
      from_arpa("\\data\\\nngram 1=1\n\\1-grams:\nabc\t<unk>\n\\end\\\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("no header") { CHECK_THROWS_AS(from_arpa("\\1-grams:\n"), ParseError); }
  SUBCASE("unknown word in a higher order") {
    CHECK_THROWS_AS(from_arpa("\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-0.1\ta\t0\n\\2-grams:\n-0.1\ta b\n\\end\\\n"),
                    FormatError);
  }
}

TEST_CASE("file save and load") {
  ppx::testing::TempDir dir("arpa");
  const NGramModel m = train_model(std::vector<std::string>{"a b", "a b", "b a"}, 2);
  save_model(m, dir / "toy.arpa");
  const NGramModel back = load_model(dir / "toy.arpa");
  for (WordId w = 0; w < m.vocab().size(); ++w) {
    if (w == Vocabulary::kBos) continue;
    const WordId mapped = *back.vocab().lookup(m.vocab().token(w));
    CHECK(back.log10_prob(mapped, {}) == m.log10_prob(w, {}));
    for (WordId c = 0; c < m.vocab().size(); ++c) {
      const WordId ctx[1] = {c};
      const WordId mctx[1] = {*back.vocab().lookup(m.vocab().token(c))};
      CHECK(back.log10_prob(mapped, mctx) == m.log10_prob(w, ctx));
    }
  }
  CHECK_THROWS_AS(load_model(dir / "missing.arpa"), IoError);
}
