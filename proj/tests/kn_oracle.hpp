#pragma once

// Brute-force interpolated Kneser-Ney, straight from the defining formulas.
// Every count is recomputed by scanning the padded corpus; nothing is shared
// with the trainer. Only for tiny corpora.

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ppx::testing {

class KnOracle {
 public:
  using Seq = std::vector<std::string>;

  KnOracle(const std::vector<std::string>& lines, int order) : order_(order) {
    for (const auto& line : lines) {
      Seq s{"<s>"};
      std::istringstream in(line);
      std::string tok;
      while (in >> tok) {
        if (tok == "<s>" || tok == "</s>") tok = "<unk>";
        s.push_back(tok);
        words_.insert(tok);
      }
      s.push_back("</s>");
      padded_.push_back(std::move(s));
    }
    words_.insert("</s>");
    words_.insert("<unk>");
    for (int k = 1; k <= order_; ++k) discounts_.push_back(discount(k));
  }

  /// Predictable vocabulary: every word plus </s> and <unk>, never <s>.
  const std::set<std::string>& words() const { return words_; }

  double discount_for(int k) const { return discounts_[static_cast<std::size_t>(k - 1)]; }

  double prob(const Seq& context, const std::string& word) const {
    return p(static_cast<int>(context.size()) + 1, context, word);
  }

  std::size_t occurrences(const Seq& g) const {
    std::size_t n = 0;
    for (const auto& s : padded_)
      for (std::size_t i = 0; i + g.size() <= s.size(); ++i)
        if (std::equal(g.begin(), g.end(), s.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
    return n;
  }

  std::size_t left_extensions(const Seq& g) const {
    std::set<std::string> left;
    for (const auto& s : padded_)
      for (std::size_t i = 1; i + g.size() <= s.size(); ++i)
        if (std::equal(g.begin(), g.end(), s.begin() + static_cast<std::ptrdiff_t>(i))) left.insert(s[i - 1]);
    return left.size();
  }

  double adjusted(const Seq& g) const {
    if (static_cast<int>(g.size()) == order_ || g.front() == "<s>") return static_cast<double>(occurrences(g));
    return static_cast<double>(left_extensions(g));
  }

 private:
  std::set<Seq> distinct(int k) const {
    std::set<Seq> out;
    for (const auto& s : padded_)
      for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= s.size(); ++i)
        out.insert(Seq(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i) + k));
    return out;
  }

  double discount(int k) const {
    double n1 = 0, n2 = 0;
    for (const auto& g : distinct(k)) {
      if (k == 1 && g[0] == "<s>") continue;
      const double a = adjusted(g);
      if (a == 1) n1 += 1;
      if (a == 2) n2 += 1;
    }
    if (n1 == 0 || n1 + 2 * n2 == 0) return 0.5;
    return std::min(n1 / (n1 + 2 * n2), 0.999);
  }

  double unigram(const std::string& w) const {
    const double d = discounts_[0];
    double total = 0, seen = 0;
    for (const auto& v : words_) {
      const double a = adjusted({v});
      total += a;
      if (a > 0) seen += 1;
    }
    auto raw = [&](const std::string& v) {
      return std::max(adjusted({v}) - d, 0.0) / total + d * seen / total / static_cast<double>(words_.size());
    };
    const double unk = raw("<unk>");
    if (unk < 1e-7) {
      if (w == "<unk>") return 1e-7;
      return raw(w) * (1 - 1e-7) / (1 - unk);
    }
    return raw(w);
  }

  double p(int k, const Seq& h, const std::string& w) const {
    if (k == 1) return unigram(w);
    const Seq lower(h.begin() + 1, h.end());
    double total = 0, types = 0;
    for (const auto& v : words_) {
      Seq g = h;
      g.push_back(v);
      const double a = adjusted(g);
      total += a;
      if (a > 0) types += 1;
    }
    if (total == 0) return p(k - 1, lower, w);
    const double d = discounts_[static_cast<std::size_t>(k - 1)];
    Seq g = h;
    g.push_back(w);
    return (std::max(adjusted(g) - d, 0.0) + d * types * p(k - 1, lower, w)) / total;
  }

  int order_;
  std::vector<Seq> padded_;
  std::set<std::string> words_;
  std::vector<double> discounts_;
};

}  // namespace ppx::testing
