#include "clinli/data/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "clinli/error.hpp"
#include "clinli/generated/resources.hpp"

namespace clinli::data {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
// Bytes of multi-byte UTF-8 sequences count as word characters.
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || static_cast<unsigned char>(c) >= 0x80; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void tokenize_chunk(std::string_view chunk, const std::vector<std::string>& abbreviations, Tokens& out) {
  const std::size_t n = chunk.size();
  std::size_t i = 0;
  while (i < n) {
    if (i == 0 || !is_word(chunk[i - 1])) {
      const auto abbr = std::find_if(abbreviations.begin(), abbreviations.end(), [&](const std::string& a) {
        return chunk.substr(i, a.size()) == a && (i + a.size() == n || !is_word(chunk[i + a.size()]));
      });
      if (abbr != abbreviations.end()) {
        out.emplace_back(*abbr);
        i += abbr->size();
        continue;
      }
    }
    const char c = chunk[i];
    std::size_t j = i + 1;
    if (is_word(c)) {
      while (j < n) {
        const char d = chunk[j];
        if (is_word(d)) {
          ++j;
        } else if ((d == '.' || d == ',') && is_digit(chunk[j - 1]) && j + 1 < n && is_digit(chunk[j + 1])) {
          ++j;
        } else if ((d == '-' || d == '/' || d == '\'') && j + 1 < n && is_word(chunk[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
    } else {
      while (j < n && chunk[j] == c) ++j;
    }
    out.emplace_back(chunk.substr(i, j - i));
    i = j;
  }
}

}  // namespace

const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> list{"e.g.", "i.e.", "dr.", "mr.", "mrs.", "ms.", "prof.", "st.",
                                             "jr.",  "sr.",  "vs.", "etc."};
  return list;
}

Tokens tokenize(std::string_view text) { return tokenize(text, default_abbreviations()); }

Tokens tokenize(std::string_view text, const std::vector<std::string>& abbreviations) {
  const std::string low = lower(text);
  Tokens out;
  std::size_t i = 0;
  while (i < low.size()) {
    while (i < low.size() && is_space(low[i])) ++i;
    std::size_t j = i;
    while (j < low.size() && !is_space(low[j])) ++j;
    if (j > i) tokenize_chunk(std::string_view(low).substr(i, j - i), abbreviations, out);
    i = j;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view body, const SentenceSplitOptions& options) {
  std::vector<std::string> sentences;
  auto emit = [&](std::size_t from, std::size_t to) {
    auto s = trim(body.substr(from, to - from));
    if (!s.empty()) sentences.emplace_back(s);
  };
  std::size_t start = 0;
  bool in_bracket = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body.compare(i, 3, "[**") == 0) {
      in_bracket = true;
      i += 2;
      continue;
    }
    if (in_bracket) {
      if (body.compare(i, 3, "**]") == 0) {
        in_bracket = false;
        i += 2;
      }
      continue;
    }
    const char c = body[i];
    if (c != '.' && c != '?' && c != '!') continue;
    if (i + 1 >= body.size() || !is_space(body[i + 1])) continue;
    std::size_t k = i + 1;
    while (k < body.size() && is_space(body[k])) ++k;
    if (k >= body.size()) continue;
    if (!std::isupper(static_cast<unsigned char>(body[k])) && !is_digit(body[k])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > 0 && (is_word(body[w - 1]) || body[w - 1] == '.')) --w;
      const std::string word = lower(body.substr(w, i - w));
      if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) continue;
      if (std::find(options.abbreviations.begin(), options.abbreviations.end(), word) != options.abbreviations.end()) {
        continue;
      }
    }
    emit(start, i + 1);
    start = i + 1;
  }
  emit(start, body.size());
  return sentences;
}

namespace {

SectionAliases parse_aliases(std::istream& in, const std::string& source) {
  SectionAliases aliases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto content = trim(line);
    if (content.empty()) continue;
    const auto tab = content.find('\t');
    if (tab == std::string_view::npos) throw ParseError("alias table " + source + ": expected alias<TAB>canonical", line_no);
    aliases.add(std::string(trim(content.substr(0, tab))), std::string(trim(content.substr(tab + 1))));
  }
  return aliases;
}

std::string normalize_header(std::string_view raw) {
  std::string out;
  bool space = false;
  for (char c : lower(trim(raw))) {
    if (is_space(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

SectionAliases SectionAliases::builtin() {
  std::istringstream in{std::string(resources::kSectionAliases)};
  return parse_aliases(in, "<builtin>");
}

SectionAliases SectionAliases::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alias table " + path);
  return parse_aliases(in, path);
}

void SectionAliases::add(std::string alias, std::string canonical) {
  entries_.emplace_back(normalize_header(alias), std::move(canonical));
}

std::string SectionAliases::canonical(std::string_view raw_header) const {
  const std::string key = normalize_header(raw_header);
  for (const auto& [alias, canon] : entries_)
    if (alias == key) return canon;
  std::string out;
  for (char c : key) out += is_word(c) ? c : '_';
  return out;
}

std::vector<NoteSection> segment_note_sections(std::string_view note, const SectionAliases& aliases,
                                               std::string_view note_id) {
  static const std::regex header_re(
      R"(^[ \t]*([A-Z][A-Za-z0-9/&()'\-]*(?:[ \t]+[A-Z][A-Za-z0-9/&()'\-]*){0,5})[ \t]*:)");
  std::vector<NoteSection> sections;
  NoteSection current{std::string(NoteSection::kUnnamed), "", "", std::string(note_id)};
  bool have_header = false;
  auto flush = [&] {
    const auto body = trim(current.body);
    if (have_header || !body.empty()) {
      current.body = std::string(body);
      sections.push_back(current);
    }
  };
  std::size_t pos = 0;
  while (pos <= note.size()) {
    std::size_t eol = note.find('\n', pos);
    if (eol == std::string_view::npos) eol = note.size();
    const std::string line(note.substr(pos, eol - pos));
    std::smatch m;
    if (std::regex_search(line, m, header_re)) {
      flush();
      have_header = true;
      current = NoteSection{aliases.canonical(m[1].str()), m[1].str(), line.substr(m.length(0)), std::string(note_id)};
    } else {
      if (!current.body.empty()) current.body += '\n';
      current.body += line;
    }
    if (eol == note.size()) break;
    pos = eol + 1;
  }
  flush();
  return sections;
}

}  // namespace clinli::data
