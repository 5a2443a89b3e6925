#include "ppx/jsonl_io.hpp"

#include <glob.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "ppx/error.hpp"

namespace ppx {
namespace {

constexpr unsigned kIoBuffer = 1u << 18;

}  // namespace

bool is_gzip_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  return in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

LineReader::LineReader(const std::filesystem::path& path) : path_(path.string()), buffer_(1 << 16) {
  gzFile f = nullptr;
  if (path_ == "-") {
    f = gzdopen(dup(STDIN_FILENO), "rb");
  } else {
    if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read " + path_);
    compressed_ = is_gzip_file(path);
    f = gzopen(path_.c_str(), "rb");
  }
  if (f == nullptr) throw IoError("cannot open " + path_);
  gzbuffer(f, kIoBuffer);
  file_ = f;
}

LineReader::~LineReader() {
  if (file_) gzclose(static_cast<gzFile>(file_));
}

bool LineReader::next(std::string& line) {
  line.clear();
  auto f = static_cast<gzFile>(file_);
  bool got_any = false;
  while (gzgets(f, buffer_.data(), static_cast<int>(buffer_.size())) != nullptr) {
    got_any = true;
    const std::size_t len = std::strlen(buffer_.data());
    line.append(buffer_.data(), len);
    if (len > 0 && buffer_[len - 1] == '\n') break;
  }
  if (!got_any) {
    int err = Z_OK;
    const char* msg = gzerror(f, &err);
    if (err != Z_OK && err != Z_BUF_ERROR) throw IoError("read error in " + path_ + ": " + msg);
    return false;
  }
  if (!line.empty() && line.back() == '\n') line.pop_back();
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

LineWriter::LineWriter(const std::filesystem::path& path) : path_(path) {
  const std::string p = path.string();
  if (path.extension() == ".gz") {
    gzFile f = gzopen(p.c_str(), "wb3");
    if (f == nullptr) throw IoError("cannot open " + p + " for writing");
    gzbuffer(f, kIoBuffer);
    gz_ = f;
  } else {
    plain_ = std::fopen(p.c_str(), "wb");
    if (plain_ == nullptr) throw IoError("cannot open " + p + " for writing");
  }
}

LineWriter::~LineWriter() {
  try {
    close();
  } catch (...) {
  }
}

void LineWriter::write_line(std::string_view line) {
  bool ok;
  if (gz_) {
    auto f = static_cast<gzFile>(gz_);
    ok = (line.empty() || gzwrite(f, line.data(), static_cast<unsigned>(line.size())) == static_cast<int>(line.size())) &&
         gzputc(f, '\n') == '\n';
  } else if (plain_) {
    ok = std::fwrite(line.data(), 1, line.size(), plain_) == line.size() && std::fputc('\n', plain_) == '\n';
  } else {
    throw IoError("write to closed file " + path_.string());
  }
  if (!ok) throw IoError("write failed: " + path_.string());
}

void LineWriter::close() {
  if (gz_) {
    const int rc = gzclose(static_cast<gzFile>(gz_));
    gz_ = nullptr;
    if (rc != Z_OK) throw IoError("close failed: " + path_.string());
  }
  if (plain_) {
    const int rc = std::fclose(plain_);
    plain_ = nullptr;
    if (rc != 0) throw IoError("close failed: " + path_.string());
  }
}

ShardWriter::ShardWriter(std::filesystem::path dir, std::string prefix, std::uint64_t shard_size)
    : dir_(std::move(dir)), prefix_(std::move(prefix)), shard_size_(std::max<std::uint64_t>(shard_size, 1)) {}

void ShardWriter::write_line(std::string_view line) {
  if (!current_ || in_current_ == shard_size_) {
    if (current_) current_->close();
    char name[64];
    std::snprintf(name, sizeof name, "-%05zu.jsonl.gz", shards_.size());
    shards_.push_back(dir_ / (prefix_ + name));
    current_ = std::make_unique<LineWriter>(shards_.back());
    in_current_ = 0;
  }
  current_->write_line(line);
  ++in_current_;
  ++records_;
}

void ShardWriter::close() {
  if (current_) current_->close();
  current_.reset();
}

std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& patterns) {
  std::vector<std::filesystem::path> out;
  for (const auto& pattern : patterns) {
    if (pattern == "-") {
      out.emplace_back(pattern);
      continue;
    }
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == GLOB_NOMATCH || (rc == 0 && g.gl_pathc == 0)) {
      globfree(&g);
      throw IoError("no input matches '" + pattern + "'");
    }
    if (rc != 0) {
      globfree(&g);
      throw IoError("cannot expand '" + pattern + "'");
    }
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir, std::string_view prefix) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const std::string head = std::string(prefix) + "-";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with(head) && name.ends_with(".jsonl.gz")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ppx
