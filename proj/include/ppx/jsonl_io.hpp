#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ppx {

/// Reads '\n'-separated lines from a plain or gzip file (detected from the
/// magic bytes). A path of "-" reads standard input.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// False at end of input. Strips the trailing "\n" (and "\r").
  bool next(std::string& line);

  bool compressed() const noexcept { return compressed_; }

 private:
  void* file_ = nullptr;  // gzFile
  bool compressed_ = false;
  std::string path_;
  std::vector<char> buffer_;
};

/// True when the file starts with the gzip magic bytes 1f 8b.
bool is_gzip_file(const std::filesystem::path& path);

/// Line-oriented writer, gzip-compressed when the path ends in ".gz".
class LineWriter {
 public:
  explicit LineWriter(const std::filesystem::path& path);
  ~LineWriter();
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write_line(std::string_view line);
  /// Flushes and closes; throws IoError on failure. Idempotent.
  void close();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  void* gz_ = nullptr;      // gzFile when compressed
  std::FILE* plain_ = nullptr;
};

/// Splits a record stream into `<prefix>-NNNNN.jsonl.gz` files of at most
/// `shard_size` records each.
class ShardWriter {
 public:
  ShardWriter(std::filesystem::path dir, std::string prefix, std::uint64_t shard_size);

  void write_line(std::string_view line);
  void close();

  const std::vector<std::filesystem::path>& shards() const noexcept { return shards_; }
  std::uint64_t records() const noexcept { return records_; }

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  std::uint64_t shard_size_;
  std::uint64_t records_ = 0;
  std::uint64_t in_current_ = 0;
  std::unique_ptr<LineWriter> current_;
  std::vector<std::filesystem::path> shards_;
};

/// Expands shell globs, de-duplicates and sorts lexicographically. A
/// pattern without matches is an IoError; "-" passes through unchanged.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& patterns);

/// Sorted `<prefix>-*.jsonl.gz` files in `dir`.
std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir, std::string_view prefix);

}  // namespace ppx
