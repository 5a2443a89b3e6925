#include "ppx/perplexity.hpp"

#include <utility>

#include "ppx/error.hpp"
#include "ppx/parallel.hpp"
#include "ppx/tokenize.hpp"

namespace ppx {

double sentence_perplexity(const NGramModel& model, std::string_view sentence) {
  std::vector<std::string_view> tokens;
  split_tokens(sentence, tokens);
  const double score = model.score_line(tokens);
  return std::pow(10.0, -score / static_cast<double>(tokens.size() + 1));
}

PerplexityRecord document_perplexity(const NGramModel& model, const Document& doc, Normalization norm) {
  if (doc.lines.empty()) throw ArgumentError("document '" + doc.id + "' has no lines");
  thread_local std::vector<std::string_view> tokens;
  double total = 0.0;
  std::uint64_t token_count = 0;
  for (const auto& line : doc.lines) {
    split_tokens(line, tokens);
    token_count += tokens.size();
    total += model.score_line(tokens);
  }
  PerplexityRecord rec;
  rec.doc_id = doc.id;
  rec.line_count = doc.lines.size();
  rec.token_count = token_count;
  const double denom = norm == Normalization::kLines ? static_cast<double>(rec.line_count)
                                                      : static_cast<double>(token_count + rec.line_count);
  rec.log10_pp = -total / denom;
  return rec;
}

void score_stream(const NGramModel& model, const std::function<std::optional<Document>()>& next,
                  const std::function<void(const PerplexityRecord&)>& on_record,
                  const std::function<void(const ScoreError&)>& on_error, const ScoreOptions& options) {
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);
  std::vector<Document> batch;
  std::vector<std::optional<PerplexityRecord>> results;
  std::vector<std::string> errors;
  bool done = false;
  while (!done) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto doc = next();
      if (!doc) {
        done = true;
        break;
      }
      batch.push_back(std::move(*doc));
    }
    results.assign(batch.size(), std::nullopt);
    errors.assign(batch.size(), {});
    parallel_for(batch.size(), options.threads, [&](std::size_t i) {
      try {
        results[i] = document_perplexity(model, batch[i], options.normalization);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (results[i])
        on_record(*results[i]);
      else
        on_error({batch[i].id, batch[i].source, errors[i]});
    }
  }
}

}  // namespace ppx
