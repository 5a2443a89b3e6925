#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppx/ngram_model.hpp"

namespace ppx {

struct DocumentSource {
  std::string file;
  std::uint64_t record_index = 0;
};

/// One corpus record. `raw` keeps the original JSON line when the document
/// came from a file so it can be written back untouched.
struct Document {
  std::string id;
  std::vector<std::string> lines;
  DocumentSource source;
  std::string raw;
};

/// Per-document score. log10_pp is authoritative; perplexity() may be +inf
/// when the linear value exceeds the double range.
struct PerplexityRecord {
  std::string doc_id;
  double log10_pp = 0.0;
  std::uint64_t line_count = 0;
  std::uint64_t token_count = 0;

  double perplexity() const { return std::pow(10.0, log10_pp); }
};

enum class Normalization {
  kLines,   // divide the summed line scores by the number of lines
  kTokens,  // divide by scored terms (tokens plus one </s> per line); diagnostics only
};

/// 10^(-score / N) with N = tokens + 1 (the </s> term).
double sentence_perplexity(const NGramModel& model, std::string_view sentence);

/// pp(W) = 10^(-sum_i score(line_i) / L). Throws ArgumentError for a
/// document without lines.
PerplexityRecord document_perplexity(const NGramModel& model, const Document& doc,
                                     Normalization norm = Normalization::kLines);

struct ScoreError {
  std::string doc_id;
  DocumentSource source;
  std::string message;
};

struct ScoreOptions {
  std::size_t threads = 1;
  std::size_t batch_size = 1024;
  Normalization normalization = Normalization::kLines;
};

/// Pulls documents from `next` until it returns nullopt. Records come out
/// in input order; failures go to `on_error` and do not stop the stream.
/// Memory is bounded by one batch.
void score_stream(const NGramModel& model, const std::function<std::optional<Document>()>& next,
                  const std::function<void(const PerplexityRecord&)>& on_record,
                  const std::function<void(const ScoreError&)>& on_error, const ScoreOptions& options = {});

}  // namespace ppx
