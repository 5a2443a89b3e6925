#include "ppx/arpa.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "ppx/error.hpp"
#include "ppx/tokenize.hpp"

namespace ppx {
namespace {

std::size_t significant_digits(std::string_view s) {
  std::size_t digits = 0;
  bool leading = true;
  for (char c : s) {
    if (c == 'e' || c == 'E') break;
    if (c < '0' || c > '9') continue;
    if (leading && c == '0') continue;
    leading = false;
    ++digits;
  }
  return digits;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("invalid number '" + std::string(field) + "'", line_no);
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  // Tab is the canonical separator; fall back to any whitespace so files
  // written by other toolkits with spaces still load.
  std::vector<std::string_view> fields;
  if (line.find('\t') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    return fields;
  }
  split_tokens(line, fields);
  return fields;
}

}  // namespace

std::string format_log10(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string shortest(buf, ptr);
  if (significant_digits(shortest) >= 7) return shortest;
  std::snprintf(buf, sizeof buf, "%#.7g", value);
  return buf;
}

void write_arpa(const NGramModel& model, std::ostream& out) {
  const Vocabulary& vocab = model.vocab();
  out << "\n\\data\\\n";
  for (int n = 1; n <= model.order(); ++n) out << "ngram " << n << '=' << model.table(n).size() << '\n';

  for (int n = 1; n <= model.order(); ++n) {
    const NGramTable& table = model.table(n);
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto x = table.ngram(a);
      const auto y = table.ngram(b);
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    });

    out << "\n\\" << n << "-grams:\n";
    for (std::size_t idx : order) {
      const NGramEntry& e = table.entry(idx);
      out << format_log10(e.log10_prob) << '\t';
      const auto words = table.ngram(idx);
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out << ' ';
        out << vocab.token(words[i]);
      }
      if (n < model.order()) out << '\t' << format_log10(e.log10_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void save_model(const NGramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_arpa(model, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

NGramModel read_arpa(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, raw)) return false;
    ++line_no;
    return true;
  };

  // Header.
  bool found_data = false;
  while (next_line()) {
    if (trim(raw) == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw ParseError("missing \\data\\ header", line_no);

  std::vector<std::size_t> declared;
  std::string_view line;
  while (next_line()) {
    line = trim(raw);
    if (line.empty()) continue;
    if (!line.starts_with("ngram ")) break;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("malformed ngram count line", line_no);
    const auto n = static_cast<std::size_t>(parse_double(trim(line.substr(6, eq - 6)), line_no));
    const auto count = static_cast<std::size_t>(parse_double(trim(line.substr(eq + 1)), line_no));
    if (n != declared.size() + 1) throw FormatError("ngram counts out of order at line " + std::to_string(line_no));
    declared.push_back(count);
  }
  if (declared.empty()) throw ParseError("no ngram counts in header", line_no);
  const int order = static_cast<int>(declared.size());

  // Unigrams are buffered until the vocabulary is complete; higher orders
  // go straight into the tables.
  struct Unigram {
    std::string word;
    NGramEntry entry;
  };
  std::vector<Unigram> unigrams;
  std::optional<NGramModel> model;
  std::vector<std::size_t> found(declared.size(), 0);
  std::vector<WordId> ids;
  std::vector<std::string_view> words;

  auto build_model = [&]() {
    Vocabulary vocab;
    for (const auto& u : unigrams) vocab.insert(u.word);
    model.emplace(order, std::move(vocab));
    NGramTable& table = model->table(1);
    table.reserve(unigrams.size());
    for (const auto& u : unigrams) {
      const WordId id[1] = {*model->vocab().lookup(u.word)};
      table.insert(id, u.entry);
    }
    unigrams = {};
  };

  bool ended = false;
  int current = 0;
  bool have_line = !in.fail();
  while (have_line) {
    line = trim(raw);
    if (line.empty()) {
      // skip
    } else if (line == "\\end\\") {
      ended = true;
      break;
    } else if (line.front() == '\\') {
      if (!line.ends_with("-grams:")) throw ParseError("unexpected section '" + std::string(line) + "'", line_no);
      const auto n = static_cast<int>(parse_double(line.substr(1, line.size() - 8), line_no));
      if (n < 1 || n > order)
        throw FormatError("section \\" + std::to_string(n) + "-grams: exceeds declared order " +
                          std::to_string(order) + " at line " + std::to_string(line_no));
      if (n != current + 1) throw FormatError("sections out of order at line " + std::to_string(line_no));
      current = n;
      if (n == 2) build_model();
      if (n >= 2) model->table(n).reserve(std::min<std::size_t>(declared[static_cast<std::size_t>(n - 1)], 1u << 26));
    } else {
      if (current == 0) throw ParseError("n-gram entry outside a section", line_no);
      const auto fields = split_fields(line);
      NGramEntry entry;
      std::size_t backoff_field = 0;
      if (line.find('\t') != std::string_view::npos) {
        if (fields.size() < 2 || fields.size() > 3) throw ParseError("expected 2 or 3 tab-separated fields", line_no);
        split_tokens(fields[1], words);
        if (fields.size() == 3) backoff_field = 2;
      } else {
        // Whitespace-only layout: prob, n words, optional backoff.
        const auto n = static_cast<std::size_t>(current);
        if (fields.size() != n + 1 && fields.size() != n + 2) throw ParseError("wrong number of fields", line_no);
        words.assign(fields.begin() + 1, fields.begin() + 1 + static_cast<std::ptrdiff_t>(n));
        if (fields.size() == n + 2) backoff_field = n + 1;
      }
      if (words.size() != static_cast<std::size_t>(current))
        throw ParseError("expected " + std::to_string(current) + " words", line_no);
      entry.log10_prob = parse_double(fields[0], line_no);
      if (backoff_field) entry.log10_backoff = parse_double(fields[backoff_field], line_no);
      if (entry.log10_prob > 0.0) throw ParseError("log10 probability above zero", line_no);
      ++found[static_cast<std::size_t>(current - 1)];
      if (current == 1) {
        unigrams.push_back({std::string(words[0]), entry});
      } else {
        ids.clear();
        for (auto w : words) {
          auto id = model->vocab().lookup(w);
          if (!id)
            throw FormatError("word '" + std::string(w) + "' in " + std::to_string(current) +
                              "-grams is not a unigram (line " + std::to_string(line_no) + ")");
          ids.push_back(*id);
        }
        model->table(current).insert(ids, entry);
      }
    }
    have_line = next_line();
  }
  if (!ended) throw ParseError("missing \\end\\ marker", line_no);
  if (!model) build_model();

  for (std::size_t n = 1; n <= declared.size(); ++n)
    if (found[n - 1] != declared[n - 1] || model->table(static_cast<int>(n)).size() != declared[n - 1])
      throw FormatError("declared " + std::to_string(declared[n - 1]) + " " + std::to_string(n) +
                        "-grams but found " + std::to_string(found[n - 1]));
  return std::move(*model);
}

NGramModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_arpa(in);
}

}  // namespace ppx
