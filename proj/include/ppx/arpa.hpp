#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ppx/ngram_model.hpp"

namespace ppx {

/// Writes the model in ARPA text format. Entries are sorted by word id per
/// order so identical models serialize to identical bytes. Values use the
/// shortest round-trip representation (never fewer than 7 significant digits).
void write_arpa(const NGramModel& model, std::ostream& out);
void save_model(const NGramModel& model, const std::filesystem::path& path);

/// Parses ARPA text. Throws ParseError (with line number) on malformed
/// content and FormatError when declared counts or orders disagree with
/// the sections actually present.
NGramModel read_arpa(std::istream& in);
NGramModel load_model(const std::filesystem::path& path);

/// Formats a log10 value the way write_arpa does.
std::string format_log10(double value);

}  // namespace ppx
