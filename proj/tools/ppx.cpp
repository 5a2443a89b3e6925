// ppx: n-gram perplexity scoring and perplexity-based corpus sampling.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppx/arpa.hpp"
#include "ppx/error.hpp"
#include "ppx/jsonl_io.hpp"
#include "ppx/kneser_ney.hpp"
#include "ppx/parallel.hpp"
#include "ppx/pipeline.hpp"
#include "ppx/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

void log(const std::string& msg) { std::cerr << "ppx: " << msg << '\n'; }

// --seed, then PPX_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback = 0) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PPX_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ppx::ArgumentError(std::string("PPX_SEED is not an unsigned integer: ") + env);
  }
  return fallback;
}

std::vector<fs::path> file_inputs(const std::vector<std::string>& patterns) {
  for (const auto& p : patterns)
    if (p == "-") throw ppx::ArgumentError("standard input is only supported by 'score'");
  return ppx::expand_inputs(patterns);
}

void write_json(const std::string& path, const json& j) {
  if (path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ppx::IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ppx::IoError("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ppx::IoError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ppx::ParseError(path + ": " + e.what(), 0);
  }
}

template <class T>
T json_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ppx::FormatError(what + ": " + e.what());
  }
}

struct TrainArgs {
  std::vector<std::string> input;
  int order = 5;
  std::uint64_t min_count = 1;
  std::string out;
};

int run_train(const TrainArgs& a) {
  if (a.order < 1) throw ppx::ArgumentError("--order must be at least 1");
  if (a.min_count < 1) throw ppx::ArgumentError("--min-count must be at least 1");
  ppx::KneserNeyTrainer trainer({a.order, a.min_count});
  for (const auto& path : file_inputs(a.input)) {
    ppx::LineReader reader(path);
    std::string line;
    while (reader.next(line)) trainer.add_line(line);
  }
  log("read " + std::to_string(trainer.line_count()) + " lines");
  const ppx::NGramModel model = trainer.build();
  ppx::save_model(model, a.out);
  std::cout << "vocab " << model.vocab().size() << '\n';
  for (int n = 1; n <= model.order(); ++n) std::cout << "ngram " << n << "=" << model.table(n).size() << '\n';
  return kExitOk;
}

struct ScoreArgs {
  std::vector<std::string> input{"-"};
  std::string model;
  std::string out = "-";
  std::size_t threads = 0;
  std::string text_field = "text";
  bool token_normalized = false;
};

int run_score(const ScoreArgs& a) {
  const ppx::NGramModel model = ppx::load_model(a.model);
  ppx::DocumentStream docs(a.input, a.text_field);
  std::optional<ppx::LineWriter> file;
  if (a.out != "-") file.emplace(a.out);
  auto emit = [&](const std::string& line) {
    if (file)
      file->write_line(line);
    else
      std::cout << line << '\n';
  };

  std::uint64_t scored = 0, errors = 0;
  auto next = [&]() -> std::optional<ppx::Document> {
    while (auto item = docs.next()) {
      if (auto* doc = std::get_if<ppx::Document>(&*item)) return std::move(*doc);
      const auto& err = std::get<ppx::IngestError>(*item);
      ++errors;
      log("skipping " + err.doc_id + ": " + err.message);
    }
    return std::nullopt;
  };
  ppx::ScoreOptions options;
  options.threads = ppx::resolve_threads(a.threads);
  options.normalization = a.token_normalized ? ppx::Normalization::kTokens : ppx::Normalization::kLines;
  ppx::score_stream(
      model, next,
      [&](const ppx::PerplexityRecord& r) {
        ++scored;
        emit(ppx::sidecar_line(r));
      },
      [&](const ppx::ScoreError& e) {
        ++errors;
        log("skipping " + e.doc_id + ": " + e.message);
      },
      options);
  if (file) file->close();
  std::cout.flush();
  log("scored " + std::to_string(scored) + " documents, " + std::to_string(errors) + " errors");
  return kExitOk;
}

struct QuartilesArgs {
  std::vector<std::string> input;
  std::string model;
  double subsample = 0.1;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string text_field = "text";
  std::size_t max_in_memory = ppx::kDefaultMaxInMemory;
};

int run_quartiles(const QuartilesArgs& a) {
  const ppx::NGramModel model = ppx::load_model(a.model);
  std::vector<std::string> files;
  for (const auto& p : file_inputs(a.input)) files.push_back(p.string());
  const auto result = ppx::summarize_corpus(model, files, a.text_field, a.subsample, resolve_seed(a.seed), a.threads,
                                            a.max_in_memory, true);
  write_json(a.out, json(result.summary));
  std::cout << "seen " << result.docs_seen << " selected " << result.docs_selected << " errored "
            << result.docs_errored << " q1 " << result.summary.q1 << " q2 " << result.summary.q2 << " q3 "
            << result.summary.q3 << '\n';
  return kExitOk;
}

struct CalibrateArgs {
  std::string summary;
  double target = 0.0;
  std::string policy = "stepwise";
  double beta = ppx::kDefaultGaussianBeta;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto summary = json_as<ppx::DistributionSummary>(read_json(a.summary), a.summary);
  std::vector<double> weights;
  const auto points = ppx::calibration_points(summary, weights);
  ppx::CalibrationResult result;
  try {
    result = ppx::calibrate(points, a.target, ppx::parse_policy_kind(a.policy), summary, a.beta, weights);
  } catch (const ppx::CalibrationError& e) {
    std::cout << "unattainable target " << a.target << ", max achievable fraction " << e.max_achievable() << '\n';
    throw;
  }
  result.spec.seed = resolve_seed(a.seed);
  write_json(a.out, json(result.spec));
  std::cout << "expected fraction " << result.expected_fraction << '\n';
  return kExitOk;
}

struct SampleArgs {
  std::vector<std::string> input;
  std::string model;
  std::string sampler;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::uint64_t holdout = 0;
  std::uint64_t shard_size = 100'000;
  double max_error_fraction = 0.01;
  std::string text_field = "text";
  std::size_t batch_size = 2048;
  std::size_t bins = ppx::kHistogramBins;
  bool token_normalized = false;
};

int run_sample(const SampleArgs& a) {
  ppx::RunConfig c;
  for (const auto& p : file_inputs(a.input)) c.input_paths.push_back(p.string());
  c.model_path = a.model;
  c.sampler = json_as<ppx::SamplerSpec>(read_json(a.sampler), a.sampler);
  c.output_dir = a.out_dir;
  c.seed = resolve_seed(a.seed, c.sampler.seed);
  c.threads = a.threads;
  c.holdout_count = a.holdout;
  c.shard_size = a.shard_size;
  c.max_error_fraction = a.max_error_fraction;
  c.text_field = a.text_field;
  c.batch_size = a.batch_size;
  c.histogram_bins = a.bins;
  c.normalization = a.token_normalized ? ppx::Normalization::kTokens : ppx::Normalization::kLines;
  const auto r = ppx::run_sampling(c);
  std::cout << "seen " << r.docs_seen << " kept " << r.docs_kept << " dropped " << r.docs_dropped << " errored "
            << r.docs_errored << " holdout " << r.docs_holdout << " kept_fraction " << r.kept_fraction << " seconds "
            << r.wall_time << '\n';
  return kExitOk;
}

struct StatsArgs {
  std::string scores;
  std::size_t bins = ppx::kHistogramBins;
  std::string out_prefix;
};

int run_stats(const StatsArgs& a) {
  const auto s = ppx::emit_stats(a.scores, a.bins, a.out_prefix);
  std::cout << "scored " << s.all.count << " kept " << (s.kept ? s.kept->count : 0) << " q1 " << s.all.q1 << " q2 "
            << s.all.q2 << " q3 " << s.all.q3 << '\n';
  return kExitOk;
}

struct HoldoutArgs {
  std::string kept_dir;
  std::uint64_t count = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::uint64_t shard_size = 100'000;
};

int run_holdout(const HoldoutArgs& a) {
  const auto f = ppx::split_holdout_dir(a.kept_dir, a.count, resolve_seed(a.seed), a.out, a.shard_size);
  std::cout << "train " << f.train_count << " holdout " << f.holdout_count << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perplexity scoring and perplexity-based sampling of JSON-lines corpora", "ppx"};
  app.set_config("--config", "", "TOML/INI file with default flag values (flags win)");
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-lm", "Train a Kneser-Ney n-gram model and write it as ARPA");
  train_cmd->add_option("--input", train.input, "Plain-text training files, one sentence per line (globs)")->required();
  train_cmd->add_option("--order", train.order, "Model order")->capture_default_str();
  train_cmd->add_option("--min-count", train.min_count, "Rarer tokens map to <unk>")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Output ARPA path")->required();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Write one perplexity record per document");
  score_cmd->add_option("--input", score.input, "JSON-lines inputs (globs, gzip ok, '-' for stdin)")->capture_default_str();
  score_cmd->add_option("--model", score.model, "ARPA model")->required();
  score_cmd->add_option("--out", score.out, "Output JSON-lines ('-' for stdout)")->capture_default_str();
  score_cmd->add_option("--threads", score.threads, "Worker threads (0 = all cores)");
  score_cmd->add_option("--text-field", score.text_field, "JSON key holding the text")->capture_default_str();
  score_cmd->add_flag("--token-normalized", score.token_normalized, "Normalize by tokens instead of lines");

  QuartilesArgs quart;
  auto* quart_cmd = app.add_subcommand("quartiles", "Perplexity distribution of a random subset");
  quart_cmd->add_option("--input", quart.input, "JSON-lines inputs (globs, gzip ok)")->required();
  quart_cmd->add_option("--model", quart.model, "ARPA model")->required();
  quart_cmd->add_option("--subsample", quart.subsample, "Fraction of documents scored")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  quart_cmd->add_option("--out", quart.out, "Summary JSON path")->required();
  quart_cmd->add_option("--seed", quart.seed, "Random seed (default: $PPX_SEED or 0)");
  quart_cmd->add_option("--threads", quart.threads, "Worker threads (0 = all cores)");
  quart_cmd->add_option("--text-field", quart.text_field, "JSON key holding the text")->capture_default_str();
  quart_cmd->add_option("--max-in-memory", quart.max_in_memory, "Reservoir size")->capture_default_str();

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Solve a sampler's alpha for a target kept fraction");
  cal_cmd->add_option("--summary", cal.summary, "Summary JSON from 'quartiles'")->required();
  cal_cmd->add_option("--target-fraction", cal.target, "Desired kept fraction in (0, 1]")->required();
  cal_cmd->add_option("--policy", cal.policy, "random, stepwise or gaussian")
      ->check(CLI::IsMember({"random", "stepwise", "gaussian"}))
      ->capture_default_str();
  cal_cmd->add_option("--beta", cal.beta, "Gaussian width")->capture_default_str();
  cal_cmd->add_option("--out", cal.out, "Sampler JSON path")->required();
  cal_cmd->add_option("--seed", cal.seed, "Seed stored in the sampler (default: $PPX_SEED or 0)");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Score, weight and subsample a corpus");
  sample_cmd->add_option("--input", sample.input, "JSON-lines inputs (globs, gzip ok)")->required();
  sample_cmd->add_option("--model", sample.model, "ARPA model")->required();
  sample_cmd->add_option("--sampler", sample.sampler, "Sampler JSON from 'calibrate'")->required();
  sample_cmd->add_option("--out-dir", sample.out_dir, "Output directory")->required();
  sample_cmd->add_option("--seed", sample.seed, "Random seed (default: $PPX_SEED, then the sampler's seed)");
  sample_cmd->add_option("--threads", sample.threads, "Worker threads (0 = all cores)");
  sample_cmd->add_option("--holdout", sample.holdout, "Kept documents moved to holdout.jsonl.gz")->capture_default_str();
  sample_cmd->add_option("--shard-size", sample.shard_size, "Records per output shard")->capture_default_str();
  sample_cmd->add_option("--max-error-fraction", sample.max_error_fraction, "Fail above this errored fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sample_cmd->add_option("--text-field", sample.text_field, "JSON key holding the text")->capture_default_str();
  sample_cmd->add_option("--batch-size", sample.batch_size, "Documents per scoring batch")->capture_default_str();
  sample_cmd->add_option("--bins", sample.bins, "Histogram bins")->capture_default_str();
  sample_cmd->add_flag("--token-normalized", sample.token_normalized, "Normalize by tokens instead of lines");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Histogram CSV and SVG from a scores file");
  stats_cmd->add_option("--scores", stats.scores, "scores.jsonl from 'sample' or 'score'")->required();
  stats_cmd->add_option("--bins", stats.bins, "Number of log-spaced bins")->capture_default_str();
  stats_cmd->add_option("--out-prefix", stats.out_prefix, "Writes <prefix>.csv and <prefix>.svg")->required();

  HoldoutArgs hold;
  auto* hold_cmd = app.add_subcommand("holdout", "Split a sampling output into train shards and a holdout file");
  hold_cmd->add_option("--kept-dir", hold.kept_dir, "Output directory of 'sample'")->required();
  hold_cmd->add_option("--count", hold.count, "Documents to hold out")->required();
  hold_cmd->add_option("--seed", hold.seed, "Random seed (default: $PPX_SEED or 0)");
  hold_cmd->add_option("--out", hold.out, "Output directory")->required();
  hold_cmd->add_option("--shard-size", hold.shard_size, "Records per train shard")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*score_cmd) return run_score(score);
    if (*quart_cmd) return run_quartiles(quart);
    if (*cal_cmd) return run_calibrate(cal);
    if (*sample_cmd) return run_sample(sample);
    if (*stats_cmd) return run_stats(stats);
    if (*hold_cmd) return run_holdout(hold);
  } catch (const ppx::ArgumentError& e) {
    log("usage error: " + std::string(e.what()));
    return kExitUsage;
  } catch (const ppx::DataError& e) {
    log("data error: " + std::string(e.what()));
    return kExitData;
  } catch (const ppx::IoError& e) {
    log("I/O error: " + std::string(e.what()));
    return kExitIo;
  } catch (const std::exception& e) {
    log("error: " + std::string(e.what()));
    return kExitData;
  }
  return kExitUsage;
}
