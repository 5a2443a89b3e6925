#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "kn_oracle.hpp"
#include "ppx/kneser_ney.hpp"

namespace ppx::testing {

inline std::vector<ppx::WordId> ids_of(const ppx::NGramModel& m, const std::vector<std::string>& toks) {
  std::vector<ppx::WordId> out;
  for (const auto& t : toks) out.push_back(m.vocab().lookup(t).value_or(ppx::Vocabulary::kUnk));
  return out;
}

// Every context over the vocabulary (plus <s>) of length 0..order-1.
inline std::vector<std::vector<std::string>> all_contexts(const std::set<std::string>& words, int order) {
  std::vector<std::string> alphabet(words.begin(), words.end());
  alphabet.push_back("<s>");
  std::vector<std::vector<std::string>> out{{}};
  std::vector<std::vector<std::string>> frontier{{}};
  for (int len = 1; len < order; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& c : frontier)
      for (const auto& w : alphabet) {
        auto e = c;
        e.push_back(w);
        next.push_back(e);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

inline double max_oracle_error(const std::vector<std::string>& corpus, int order) {
  const ppx::NGramModel model = ppx::train_model(corpus, order);
  const KnOracle oracle(corpus, order);
  double worst = 0.0;
  for (const auto& ctx : all_contexts(oracle.words(), order)) {
    const auto ctx_ids = ids_of(model, ctx);
    for (const auto& w : oracle.words()) {
      const double got = model.prob(ids_of(model, {w})[0], ctx_ids);
      worst = std::max(worst, std::abs(got - oracle.prob(ctx, w)));
    }
  }
  return worst;
}


// Largest |1 - sum_w p(w | h)| over the same contexts, w ranging over the
// vocabulary without <s>.
inline double max_normalization_error(const std::vector<std::string>& corpus, int order) {
  const ppx::NGramModel model = ppx::train_model(corpus, order);
  const KnOracle oracle(corpus, order);
  double worst = 0.0;
  for (const auto& ctx : all_contexts(oracle.words(), order)) {
    const auto ctx_ids = ids_of(model, ctx);
    double total = 0.0;
    for (ppx::WordId w = 0; w < model.vocab().size(); ++w)
      if (w != ppx::Vocabulary::kBos) total += model.prob(w, ctx_ids);
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

}  // namespace ppx::testing
