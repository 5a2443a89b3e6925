#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ppx/distribution.hpp"
#include "ppx/jsonl_io.hpp"
#include "ppx/ngram_model.hpp"
#include "ppx/perplexity.hpp"
#include "ppx/sampling.hpp"

namespace ppx {

/// One JSON line as read from an input file, before parsing.
struct RawRecord {
  std::string line;
  DocumentSource source;
};

/// Reads records from every file in order (files sorted by expand_inputs).
/// Blank lines are skipped and do not consume a record index.
class RecordReader {
 public:
  explicit RecordReader(std::vector<std::filesystem::path> files);

  std::optional<RawRecord> next();

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t file_index_ = 0;
  std::unique_ptr<LineReader> reader_;
  std::string basename_;
  std::uint64_t record_index_ = 0;
};

/// "<file basename>:<record index>".
std::string default_doc_id(const DocumentSource& source);

/// Parses a JSON line into a Document. The id is the record's string or
/// integer `id_field` when present, default_doc_id otherwise. Text is split
/// on '\n'. Throws DataError for malformed JSON or a missing/non-string
/// text field.
Document parse_record(const RawRecord& record, std::string_view text_field, std::string_view id_field = "id");

struct IngestError {
  std::string doc_id;
  DocumentSource source;
  std::string message;
};

/// Documents from JSON-lines files, with malformed records surfaced as
/// IngestError entries instead of stopping the stream.
class DocumentStream {
 public:
  DocumentStream(const std::vector<std::string>& paths, std::string text_field, std::string id_field = "id");

  std::optional<std::variant<Document, IngestError>> next();

 private:
  RecordReader reader_;
  std::string text_field_;
  std::string id_field_;
};

struct RunConfig {
  std::vector<std::string> input_paths;
  std::string text_field = "text";
  std::string id_field = "id";
  std::filesystem::path model_path;
  SamplerSpec sampler;
  std::filesystem::path output_dir;
  std::uint64_t holdout_count = 0;
  std::uint64_t shard_size = 100'000;
  double subsample_for_quartiles = 0.1;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::size_t batch_size = 2048;
  std::size_t max_in_memory = kDefaultMaxInMemory;
  std::size_t histogram_bins = kHistogramBins;
  /// The run fails (after writing its outputs) above this errored fraction.
  double max_error_fraction = 0.01;
  Normalization normalization = Normalization::kLines;

  void validate() const;
};

struct RunReport {
  std::uint64_t docs_seen = 0;
  std::uint64_t docs_kept = 0;
  std::uint64_t docs_dropped = 0;
  std::uint64_t docs_errored = 0;
  std::uint64_t docs_holdout = 0;
  double kept_fraction = 0.0;
  std::optional<DistributionSummary> input_summary;
  std::optional<DistributionSummary> kept_summary;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  SamplerSpec sampler;
};

void to_json(nlohmann::json& j, const RunReport& r);

/// Scores, weights and samples every input document in one streaming pass.
/// Writes kept-NNNNN.jsonl.gz, scores.jsonl, errors.jsonl, report.json,
/// hist.csv and hist.svg (plus train/holdout shards when holdout_count > 0)
/// under output_dir. Throws DataError after writing outputs when the
/// errored fraction exceeds the budget; on output I/O failure writes
/// manifest.json listing the files produced so far and rethrows.
RunReport run_sampling(const RunConfig& config, const NGramModel& model);
RunReport run_sampling(const RunConfig& config);

/// Outcome of summarizing a Bernoulli subsample of a corpus.
struct CorpusSummary {
  DistributionSummary summary;
  std::uint64_t docs_seen = 0;
  std::uint64_t docs_selected = 0;
  std::uint64_t docs_errored = 0;
};

/// Scores a keyed Bernoulli(`subsample`) subset of the corpus and returns
/// its perplexity distribution. Throws DataError when nothing is selected.
CorpusSummary summarize_corpus(const NGramModel& model, const std::vector<std::string>& input_paths,
                               std::string_view text_field, double subsample, std::uint64_t seed,
                               std::size_t threads = 0, std::size_t max_in_memory = kDefaultMaxInMemory,
                               bool include_sample = true);

struct HoldoutSplit {
  std::vector<std::string> train;
  std::vector<std::string> holdout;
};

/// Holds out the `holdout_count` ids with the smallest keyed hash under
/// `seed`. Both outputs keep input order; they are disjoint and together
/// equal the input. ArgumentError when holdout_count exceeds the input.
HoldoutSplit split_holdout(std::span<const std::string> kept_ids, std::uint64_t holdout_count, std::uint64_t seed);

struct HoldoutFiles {
  std::vector<std::filesystem::path> train_shards;
  std::filesystem::path holdout_path;
  std::uint64_t train_count = 0;
  std::uint64_t holdout_count = 0;
};

/// File-level split of a sampling output directory: kept ids come from
/// its scores.jsonl and records from its kept shards (same order). Writes
/// train-NNNNN.jsonl.gz and holdout.jsonl.gz under `out_dir`.
HoldoutFiles split_holdout_dir(const std::filesystem::path& kept_dir, std::uint64_t holdout_count, std::uint64_t seed,
                               const std::filesystem::path& out_dir, std::uint64_t shard_size = 100'000);

struct HistogramRow {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count_all = 0;
  std::uint64_t count_kept = 0;
};

struct StatsResult {
  std::vector<HistogramRow> rows;
  DistributionSummary all;
  std::optional<DistributionSummary> kept;
};

/// Histogram CSV (lo,hi,count_all,count_kept) and an SVG overlay of the
/// scored vs kept distributions with quartile markers, from a scores.jsonl
/// sidecar. Writes `<out_prefix>.csv` and `<out_prefix>.svg`.
StatsResult emit_stats(const std::filesystem::path& sidecar, std::size_t bins, const std::filesystem::path& out_prefix);

/// One sidecar line: {"id","pp","log10_pp","lines","tokens"[,"kept"]}.
std::string sidecar_line(const PerplexityRecord& rec, std::optional<bool> kept = std::nullopt);

}  // namespace ppx
