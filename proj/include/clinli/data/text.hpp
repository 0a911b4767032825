#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "clinli/data/nli.hpp"

namespace clinli::data {

/// Abbreviations that keep their trailing period, lowercase, period included.
const std::vector<std::string>& default_abbreviations();

/// Lowercases and splits on whitespace, detaching punctuation. Decimal numbers,
/// intra-word connectors (x-ray, h/o, 3-23) and abbreviation-list entries stay
/// whole; runs of one repeated punctuation character (`**`, `...`) form a
/// single token.
Tokens tokenize(std::string_view text);
Tokens tokenize(std::string_view text, const std::vector<std::string>& abbreviations);

struct SentenceSplitOptions {
  // Words (without the period, lowercase) after which a period never ends a
  // sentence.
  std::vector<std::string> abbreviations{"dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "vs", "e.g", "i.e"};
};

/// Splits on [.?!] followed by whitespace and an uppercase letter or digit.
/// Decimals, listed abbreviations, single-letter initials and `[** ... **]`
/// spans are never split.
std::vector<std::string> split_sentences(std::string_view body, const SentenceSplitOptions& options = {});

struct NoteSection {
  static constexpr std::string_view kUnnamed = "UNNAMED";

  std::string header;  // canonical name, or kUnnamed
  std::string raw_header;
  std::string body;
  std::string note_id;
};

/// Header alias -> canonical section name. Keys are lowercase, space separated.
class SectionAliases {
 public:
  static SectionAliases builtin();
  /// Tab-separated `alias<TAB>canonical` lines; `#` starts a comment.
  static SectionAliases load(const std::string& path);

  void add(std::string alias, std::string canonical);
  /// Canonical name for a raw header (without colon).
  std::string canonical(std::string_view raw_header) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// A header is a line-initial run of 1-6 capitalized words ending in ':'.
/// Text before the first header becomes an UNNAMED section; bodies are trimmed.
std::vector<NoteSection> segment_note_sections(std::string_view note, const SectionAliases& aliases,
                                               std::string_view note_id = "");

}  // namespace clinli::data
