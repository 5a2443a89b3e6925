#include "ppx/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <queue>
#include <unordered_set>

#include "ppx/arpa.hpp"
#include "ppx/error.hpp"
#include "ppx/parallel.hpp"
#include "ppx/tokenize.hpp"

namespace ppx {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// Outcome of the parallel part of processing one record.
struct Scored {
  std::string id;
  std::optional<PerplexityRecord> record;
  std::string error;
  bool selected = false;
};

Scored score_record(const RawRecord& raw, const NGramModel& model, std::string_view text_field,
                    std::string_view id_field, Normalization norm) {
  Scored s;
  try {
    Document doc = parse_record(raw, text_field, id_field);
    s.id = doc.id;
    PerplexityRecord rec = document_perplexity(model, doc, norm);
    if (!std::isfinite(rec.perplexity())) throw DataError("perplexity exceeds the double range");
    s.record = std::move(rec);
  } catch (const Error& e) {
    if (s.id.empty()) s.id = default_doc_id(raw.source);
    s.error = e.what();
  }
  return s;
}

std::string error_line(const std::string& id, const DocumentSource& source, const std::string& message) {
  return json{{"id", id}, {"file", source.file}, {"record", source.record_index}, {"error", message}}.dump();
}

struct SidecarEntry {
  std::string id;
  double log10_pp = 0.0;
  bool kept = false;
};

SidecarEntry parse_sidecar(const std::string& line, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    return {j.at("id").get<std::string>(), j.at("log10_pp").get<double>(), j.value("kept", false)};
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed sidecar record: ") + e.what(), line_no);
  }
}

std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

void write_svg(const fs::path& path, const StatsResult& stats) {
  constexpr double kWidth = 900, kHeight = 450, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double xmin = std::log10(stats.all.min);
  double xmax = std::log10(stats.all.max);
  if (xmax - xmin < 1e-9) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  auto sx = [&](double pp) { return kLeft + (std::log10(pp) - xmin) / (xmax - xmin) * plot_w; };

  std::uint64_t total_all = 0, total_kept = 0;
  for (const auto& r : stats.rows) {
    total_all += r.count_all;
    total_kept += r.count_kept;
  }
  double ymax = 0.0;
  for (const auto& r : stats.rows) {
    ymax = std::max(ymax, static_cast<double>(r.count_all) / static_cast<double>(std::max<std::uint64_t>(total_all, 1)));
    ymax = std::max(ymax, static_cast<double>(r.count_kept) / static_cast<double>(std::max<std::uint64_t>(total_kept, 1)));
  }
  if (ymax <= 0.0) ymax = 1.0;
  auto sy = [&](double frac) { return kTop + plot_h - frac / ymax * plot_h; };

  auto step_path = [&](bool kept) {
    const std::uint64_t total = std::max<std::uint64_t>(kept ? total_kept : total_all, 1);
    std::string d;
    for (std::size_t i = 0; i < stats.rows.size(); ++i) {
      const auto& r = stats.rows[i];
      const double frac = static_cast<double>(kept ? r.count_kept : r.count_all) / static_cast<double>(total);
      double x0 = sx(r.lo), x1 = sx(r.hi);
      if (stats.rows.size() == 1) {
        x0 = kLeft + plot_w * 0.45;
        x1 = kLeft + plot_w * 0.55;
      }
      d += (i == 0 ? "M" : "L") + format_double(x0) + "," + format_double(sy(frac));
      d += "L" + format_double(x1) + "," + format_double(sy(frac));
    }
    return d;
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << svg_escape("Perplexity distribution (scored vs kept)") << "</text>\n";
  // Axes and integer-decade ticks.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (double t = std::ceil(xmin); t <= std::floor(xmax); t += 1.0) {
    const double x = kLeft + (t - xmin) / (xmax - xmin) * plot_w;
    out << "<line x1=\"" << format_double(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << format_double(x)
        << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << format_double(x) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">1e"
        << static_cast<int>(t) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">perplexity (log scale)</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 18 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">fraction of documents</text>\n";

  out << "<path d=\"" << step_path(false) << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  if (stats.kept)
    out << "<path d=\"" << step_path(true) << "\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"1.5\"/>\n";

  auto marker = [&](double q, const char* dash) {
    const double x = stats.rows.size() == 1 ? kLeft + plot_w * 0.5 : sx(q);
    out << "<line x1=\"" << format_double(x) << "\" y1=\"" << kTop << "\" x2=\"" << format_double(x) << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"#d62728\"" << dash << "/>\n";
  };
  for (double q : {stats.all.q1, stats.all.q2, stats.all.q3}) marker(q, "");
  if (stats.kept)
    for (double q : {stats.kept->q1, stats.kept->q2, stats.kept->q3}) marker(q, " stroke-dasharray=\"4 3\"");

  const double lx = kLeft + plot_w - 170;
  out << "<rect x=\"" << lx << "\" y=\"" << kTop + 5 << "\" width=\"165\" height=\"58\" fill=\"white\" stroke=\"#999\"/>\n";
  out << "<line x1=\"" << lx + 8 << "\" y1=\"" << kTop + 18 << "\" x2=\"" << lx + 30 << "\" y2=\"" << kTop + 18
      << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/><text x=\"" << lx + 36 << "\" y=\"" << kTop + 22
      << "\">scored (" << total_all << ")</text>\n";
  out << "<line x1=\"" << lx + 8 << "\" y1=\"" << kTop + 34 << "\" x2=\"" << lx + 30 << "\" y2=\"" << kTop + 34
      << "\" stroke=\"#ff7f0e\" stroke-width=\"2\"/><text x=\"" << lx + 36 << "\" y=\"" << kTop + 38
      << "\">kept (" << total_kept << ")</text>\n";
  out << "<line x1=\"" << lx + 8 << "\" y1=\"" << kTop + 50 << "\" x2=\"" << lx + 30 << "\" y2=\"" << kTop + 50
      << "\" stroke=\"#d62728\"/><text x=\"" << lx + 36 << "\" y=\"" << kTop + 54 << "\">quartiles</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Ingest

RecordReader::RecordReader(std::vector<fs::path> files) : files_(std::move(files)) {}

std::optional<RawRecord> RecordReader::next() {
  RawRecord rec;
  while (true) {
    if (!reader_) {
      if (file_index_ >= files_.size()) return std::nullopt;
      const fs::path& path = files_[file_index_];
      reader_ = std::make_unique<LineReader>(path);
      basename_ = path == "-" ? "stdin" : path.filename().string();
      record_index_ = 0;
    }
    if (reader_->next(rec.line)) {
      if (rec.line.find_first_not_of(" \t\r") == std::string::npos) continue;
      rec.source = {basename_, record_index_++};
      return rec;
    }
    reader_.reset();
    ++file_index_;
  }
}

std::string default_doc_id(const DocumentSource& source) {
  return source.file + ":" + std::to_string(source.record_index);
}

Document parse_record(const RawRecord& record, std::string_view text_field, std::string_view id_field) {
  json j = json::parse(record.line, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON at " + default_doc_id(record.source));
  if (!j.is_object()) throw DataError("record is not a JSON object at " + default_doc_id(record.source));

  Document doc;
  doc.source = record.source;
  const auto id_it = id_field.empty() ? j.end() : j.find(id_field);
  if (id_it != j.end() && id_it->is_string() && !id_it->get_ref<const std::string&>().empty())
    doc.id = id_it->get<std::string>();
  else if (id_it != j.end() && id_it->is_number_integer())
    doc.id = id_it->dump();
  else
    doc.id = default_doc_id(record.source);

  const auto text_it = j.find(text_field);
  if (text_it == j.end() || !text_it->is_string())
    throw DataError("record " + doc.id + " has no string field '" + std::string(text_field) + "'");
  const auto& text = text_it->get_ref<const std::string&>();
  for (auto line : split_lines(text)) doc.lines.emplace_back(line);
  doc.raw = record.line;
  return doc;
}

DocumentStream::DocumentStream(const std::vector<std::string>& paths, std::string text_field, std::string id_field)
    : reader_(expand_inputs(paths)), text_field_(std::move(text_field)), id_field_(std::move(id_field)) {}

std::optional<std::variant<Document, IngestError>> DocumentStream::next() {
  auto raw = reader_.next();
  if (!raw) return std::nullopt;
  try {
    return parse_record(*raw, text_field_, id_field_);
  } catch (const DataError& e) {
    return IngestError{default_doc_id(raw->source), raw->source, e.what()};
  }
}

// ---------------------------------------------------------------------------
// Sampling run

void RunConfig::validate() const {
  if (input_paths.empty()) throw ArgumentError("no input paths");
  if (output_dir.empty()) throw ArgumentError("no output directory");
  if (!(subsample_for_quartiles >= 0.0 && subsample_for_quartiles <= 1.0))
    throw ArgumentError("subsample fraction must lie in [0, 1]");
  if (!(max_error_fraction >= 0.0 && max_error_fraction <= 1.0))
    throw ArgumentError("error budget must lie in [0, 1]");
  if (shard_size == 0) throw ArgumentError("shard size must be positive");
  sampler.validate();
}

void to_json(json& j, const RunReport& r) {
  j = json{{"docs_seen", r.docs_seen},     {"docs_kept", r.docs_kept},         {"docs_dropped", r.docs_dropped},
           {"docs_errored", r.docs_errored}, {"docs_holdout", r.docs_holdout}, {"kept_fraction", r.kept_fraction},
           {"wall_time", r.wall_time},     {"seed", r.seed},                   {"threads", r.threads},
           {"sampler", r.sampler}};
  j["input_summary"] = r.input_summary ? json(*r.input_summary) : json(nullptr);
  j["kept_summary"] = r.kept_summary ? json(*r.kept_summary) : json(nullptr);
}

std::string sidecar_line(const PerplexityRecord& rec, std::optional<bool> kept) {
  json j = {{"id", rec.doc_id}, {"pp", rec.perplexity()}, {"log10_pp", rec.log10_pp}, {"lines", rec.line_count},
            {"tokens", rec.token_count}};
  if (kept) j["kept"] = *kept;
  return j.dump();
}

RunReport run_sampling(const RunConfig& config) {
  config.validate();
  const NGramModel model = load_model(config.model_path);
  return run_sampling(config, model);
}

RunReport run_sampling(const RunConfig& config, const NGramModel& model) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const auto files = expand_inputs(config.input_paths);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
  const fs::path out_dir = fs::canonical(config.output_dir);
  for (const auto& f : files) {
    if (f == "-") continue;
    const fs::path parent = fs::weakly_canonical(f).parent_path();
    if (parent == out_dir) throw ArgumentError("output directory must differ from input location " + parent.string());
  }
  // Stale shards from an earlier run would otherwise be picked up.
  for (const char* prefix : {"kept", "train"})
    for (const auto& old : list_shards(out_dir, prefix)) fs::remove(old);

  RunReport report;
  report.seed = config.seed;
  report.threads = resolve_threads(config.threads);
  report.sampler = config.sampler;
  report.sampler.seed = config.seed;

  std::vector<fs::path> written;
  QuantileEstimator input_est(config.max_in_memory, config.seed);
  QuantileEstimator kept_est(config.max_in_memory, config.seed);
  ShardWriter kept_writer(out_dir, "kept", config.shard_size);
  try {
    LineWriter sidecar(out_dir / "scores.jsonl");
    written.push_back(sidecar.path());
    LineWriter errors(out_dir / "errors.jsonl");
    written.push_back(errors.path());

    RecordReader reader(files);
    std::vector<RawRecord> batch;
    std::vector<Scored> scored;
    std::vector<double> weights;
    std::vector<char> kept;
    bool done = false;
    while (!done) {
      batch.clear();
      while (batch.size() < config.batch_size) {
        auto rec = reader.next();
        if (!rec) {
          done = true;
          break;
        }
        batch.push_back(std::move(*rec));
      }
      scored.assign(batch.size(), Scored{});
      kept.assign(batch.size(), 0);
      parallel_for(batch.size(), report.threads, [&](std::size_t i) {
        scored[i] = score_record(batch[i], model, config.text_field, config.id_field, config.normalization);
        if (scored[i].record) {
          const double w = report.sampler.weight(scored[i].record->perplexity());
          kept[i] = keep_decision(w, scored[i].id, config.seed) ? 1 : 0;
        }
      });

      for (std::size_t i = 0; i < batch.size(); ++i) {
        ++report.docs_seen;
        const Scored& s = scored[i];
        if (!s.record) {
          ++report.docs_errored;
          errors.write_line(error_line(s.id, batch[i].source, s.error));
          continue;
        }
        const double pp = s.record->perplexity();
        sidecar.write_line(sidecar_line(*s.record, kept[i] != 0));
        input_est.add(pp);
        if (kept[i]) {
          ++report.docs_kept;
          kept_est.add(pp);
          kept_writer.write_line(batch[i].line);
        } else {
          ++report.docs_dropped;
        }
      }
    }
    kept_writer.close();
    sidecar.close();
    errors.close();
  } catch (const IoError& e) {
    json manifest = {{"error", e.what()}, {"complete", false}};
    auto files_json = json::array();
    for (const auto& p : written) files_json.push_back(p.filename().string());
    for (const auto& p : kept_writer.shards()) files_json.push_back(p.filename().string());
    manifest["files"] = std::move(files_json);
    try {
      write_json_file(out_dir / "manifest.json", manifest);
    } catch (const IoError&) {
    }
    throw;
  }

  const std::uint64_t scored_docs = report.docs_seen - report.docs_errored;
  report.kept_fraction =
      scored_docs == 0 ? 0.0 : static_cast<double>(report.docs_kept) / static_cast<double>(scored_docs);
  if (input_est.count() > 0) report.input_summary = input_est.summary(config.histogram_bins);
  if (kept_est.count() > 0) report.kept_summary = kept_est.summary(config.histogram_bins);

  if (config.holdout_count > 0) {
    const auto split = split_holdout_dir(out_dir, config.holdout_count, config.seed, out_dir, config.shard_size);
    report.docs_holdout = split.holdout_count;
  }
  if (scored_docs > 0) emit_stats(out_dir / "scores.jsonl", config.histogram_bins, out_dir / "hist");

  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json_file(out_dir / "report.json", json(report));

  if (report.docs_seen > 0 &&
      static_cast<double>(report.docs_errored) / static_cast<double>(report.docs_seen) > config.max_error_fraction)
    throw DataError("errored fraction " + std::to_string(static_cast<double>(report.docs_errored) /
                                                         static_cast<double>(report.docs_seen)) +
                    " exceeds the error budget " + std::to_string(config.max_error_fraction));
  return report;
}

CorpusSummary summarize_corpus(const NGramModel& model, const std::vector<std::string>& input_paths,
                               std::string_view text_field, double subsample, std::uint64_t seed, std::size_t threads,
                               std::size_t max_in_memory, bool include_sample) {
  if (!(subsample >= 0.0 && subsample <= 1.0)) throw ArgumentError("subsample fraction must lie in [0, 1]");
  const std::size_t workers = resolve_threads(threads);
  RecordReader reader(expand_inputs(input_paths));
  QuantileEstimator est(max_in_memory, seed);
  CorpusSummary out;

  constexpr std::size_t kBatch = 2048;
  std::vector<RawRecord> batch;
  std::vector<Scored> scored;
  bool done = false;
  while (!done) {
    batch.clear();
    while (batch.size() < kBatch) {
      auto rec = reader.next();
      if (!rec) {
        done = true;
        break;
      }
      batch.push_back(std::move(*rec));
    }
    scored.assign(batch.size(), Scored{});
    parallel_for(batch.size(), workers, [&](std::size_t i) {
      Scored& s = scored[i];
      try {
        const Document doc = parse_record(batch[i], text_field);
        s.id = doc.id;
        s.selected = keyed_uniform(seed, s.id, RandomStream::kSubsample) < subsample;
        if (!s.selected) return;
        PerplexityRecord rec = document_perplexity(model, doc);
        if (!std::isfinite(rec.perplexity())) throw DataError("perplexity exceeds the double range");
        s.record = std::move(rec);
      } catch (const Error& e) {
        s.error = e.what();
      }
    });
    for (const auto& s : scored) {
      ++out.docs_seen;
      if (!s.error.empty()) {
        ++out.docs_errored;
      } else if (s.selected) {
        ++out.docs_selected;
        est.add(s.record->perplexity());
      }
    }
  }
  if (est.count() == 0) throw DataError("no documents selected for the distribution estimate");
  out.summary = est.summary(kHistogramBins, include_sample);
  return out;
}

// ---------------------------------------------------------------------------
// Holdout

namespace {

struct HoldoutKey {
  std::uint64_t hash;
  std::uint64_t position;
  bool operator<(const HoldoutKey& o) const { return hash != o.hash ? hash < o.hash : position < o.position; }
};

}  // namespace

HoldoutSplit split_holdout(std::span<const std::string> kept_ids, std::uint64_t holdout_count, std::uint64_t seed) {
  if (holdout_count > kept_ids.size())
    throw ArgumentError("holdout count " + std::to_string(holdout_count) + " exceeds kept count " +
                        std::to_string(kept_ids.size()));
  std::vector<HoldoutKey> keys(kept_ids.size());
  for (std::size_t i = 0; i < kept_ids.size(); ++i) keys[i] = {keyed_bits(seed, kept_ids[i], RandomStream::kHoldout), i};
  std::vector<char> held(kept_ids.size(), 0);
  if (holdout_count > 0) {
    std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(holdout_count - 1), keys.end());
    for (std::size_t i = 0; i < holdout_count; ++i) held[keys[i].position] = 1;
  }
  HoldoutSplit out;
  for (std::size_t i = 0; i < kept_ids.size(); ++i) (held[i] ? out.holdout : out.train).push_back(kept_ids[i]);
  return out;
}

HoldoutFiles split_holdout_dir(const fs::path& kept_dir, std::uint64_t holdout_count, std::uint64_t seed,
                               const fs::path& out_dir, std::uint64_t shard_size) {
  const fs::path sidecar_path = kept_dir / "scores.jsonl";
  if (!fs::exists(sidecar_path)) throw IoError("missing " + sidecar_path.string());

  // Pass 1: the holdout_count smallest keys among kept records.
  std::priority_queue<HoldoutKey> heap;
  std::uint64_t kept_total = 0;
  {
    LineReader in(sidecar_path);
    std::string line;
    std::size_t line_no = 0;
    while (in.next(line)) {
      ++line_no;
      if (line.empty()) continue;
      const SidecarEntry e = parse_sidecar(line, line_no);
      if (!e.kept) continue;
      const HoldoutKey key{keyed_bits(seed, e.id, RandomStream::kHoldout), kept_total++};
      if (heap.size() < holdout_count) {
        heap.push(key);
      } else if (holdout_count > 0 && key < heap.top()) {
        heap.pop();
        heap.push(key);
      }
    }
  }
  if (holdout_count > kept_total)
    throw ArgumentError("holdout count " + std::to_string(holdout_count) + " exceeds kept count " +
                        std::to_string(kept_total));
  std::unordered_set<std::uint64_t> held;
  while (!heap.empty()) {
    held.insert(heap.top().position);
    heap.pop();
  }

  // Pass 2: route kept records, aligned with the sidecar's kept entries.
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (const auto& old : list_shards(out_dir, "train")) fs::remove(old);

  HoldoutFiles out;
  out.holdout_path = out_dir / "holdout.jsonl.gz";
  ShardWriter train(out_dir, "train", shard_size);
  LineWriter holdout(out.holdout_path);
  RecordReader kept_records(list_shards(kept_dir, "kept"));
  LineReader in(sidecar_path);
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t position = 0;
  while (in.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!parse_sidecar(line, line_no).kept) continue;
    auto rec = kept_records.next();
    if (!rec) throw FormatError("kept shards hold fewer records than scores.jsonl marks as kept");
    if (held.count(position++)) {
      holdout.write_line(rec->line);
      ++out.holdout_count;
    } else {
      train.write_line(rec->line);
      ++out.train_count;
    }
  }
  if (kept_records.next()) throw FormatError("kept shards hold more records than scores.jsonl marks as kept");
  train.close();
  holdout.close();
  out.train_shards = train.shards();
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

StatsResult emit_stats(const fs::path& sidecar, std::size_t bins, const fs::path& out_prefix) {
  if (bins == 0) throw ArgumentError("bins must be positive");
  QuantileEstimator all_est;
  QuantileEstimator kept_est;
  double lo = 0.0, hi = 0.0;
  {
    LineReader in(sidecar);
    std::string line;
    std::size_t line_no = 0;
    while (in.next(line)) {
      ++line_no;
      if (line.empty()) continue;
      const SidecarEntry e = parse_sidecar(line, line_no);
      const double pp = std::pow(10.0, e.log10_pp);
      all_est.add(pp);
      if (e.kept) kept_est.add(pp);
    }
  }
  if (all_est.count() == 0) throw ArgumentError("sidecar " + sidecar.string() + " has no records");

  StatsResult stats;
  stats.all = all_est.summary(bins);
  if (kept_est.count() > 0) stats.kept = kept_est.summary(bins);
  lo = stats.all.min;
  hi = stats.all.max;

  for (const auto& b : log_bins(lo, hi, bins)) stats.rows.push_back({b.lo, b.hi, 0, 0});
  {
    LineReader in(sidecar);
    std::string line;
    std::size_t line_no = 0;
    while (in.next(line)) {
      ++line_no;
      if (line.empty()) continue;
      const SidecarEntry e = parse_sidecar(line, line_no);
      auto& row = stats.rows[log_bin_index(std::pow(10.0, e.log10_pp), lo, hi, stats.rows.size())];
      ++row.count_all;
      if (e.kept) ++row.count_kept;
    }
  }

  const fs::path csv_path = fs::path(out_prefix.string() + ".csv");
  {
    LineWriter csv(csv_path);
    csv.write_line("lo,hi,count_all,count_kept");
    for (const auto& r : stats.rows)
      csv.write_line(format_double(r.lo) + "," + format_double(r.hi) + "," + std::to_string(r.count_all) + "," +
                     std::to_string(r.count_kept));
    csv.close();
  }
  write_svg(fs::path(out_prefix.string() + ".svg"), stats);
  return stats;
}

}  // namespace ppx
