#include "clinli/data/dataset_io.hpp"

#include <fstream>

#include "clinli/data/text.hpp"
#include "clinli/error.hpp"
#include "json.hpp"

namespace clinli::data {

using nlohmann::json;

std::string_view label_name(Label label) {
  switch (label) {
    case Label::entailment: return "entailment";
    case Label::contradiction: return "contradiction";
    case Label::neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Label> parse_label(std::string_view name) {
  for (Label l : kLabels)
    if (label_name(l) == name) return l;
  return std::nullopt;
}

std::string_view split_name(SplitName name) {
  switch (name) {
    case SplitName::train: return "train";
    case SplitName::dev: return "dev";
    case SplitName::test: return "test";
  }
  return "train";
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

namespace {

Tokens sentence_tokens(const json& record, const char* text_key, const char* tokens_key, std::size_t line) {
  if (auto it = record.find(tokens_key); it != record.end()) {
    if (!it->is_array()) throw ParseError(std::string(tokens_key) + " must be an array of strings", line);
    Tokens out;
    for (const auto& t : *it) {
      if (!t.is_string()) throw ParseError(std::string(tokens_key) + " must be an array of strings", line);
      out.push_back(t.get<std::string>());
    }
    return out;
  }
  auto it = record.find(text_key);
  if (it == record.end() || !it->is_string()) throw ParseError(std::string("missing string field ") + text_key, line);
  return tokenize(it->get<std::string>());
}

}  // namespace

ReadResult read_jsonl(std::istream& in, SplitName name) {
  ReadResult result;
  result.split.name = name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw ParseError("record is not a JSON object", line_no);
    auto gold = record.find("gold_label");
    if (gold == record.end() || !gold->is_string()) throw ParseError("missing string field gold_label", line_no);
    const auto gold_text = gold->get<std::string>();
    if (gold_text == "-") {
      ++result.skipped_unlabeled;
      continue;
    }
    const auto label = parse_label(gold_text);
    if (!label) throw ParseError("unknown label \"" + gold_text + "\"", line_no);

    NliPair pair;
    pair.label = *label;
    pair.premise = sentence_tokens(record, "sentence1", "sentence1_tokens", line_no);
    pair.hypothesis = sentence_tokens(record, "sentence2", "sentence2_tokens", line_no);
    if (pair.premise.empty() || pair.hypothesis.empty()) throw ParseError("empty premise or hypothesis", line_no);
    if (auto id = record.find("pairID"); id != record.end() && id->is_string()) {
      pair.pair_id = id->get<std::string>();
    } else {
      pair.pair_id = "line-" + std::to_string(line_no);
    }
    result.split.pairs.push_back(std::move(pair));
  }
  return result;
}

ReadResult read_jsonl(const std::filesystem::path& path, SplitName name) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return read_jsonl(in, name);
}

void write_jsonl(std::ostream& out, const DatasetSplit& split) {
  for (const auto& p : split.pairs) {
    json record{{"gold_label", label_name(p.label)},
                {"sentence1", join_tokens(p.premise)},
                {"sentence2", join_tokens(p.hypothesis)},
                {"pairID", p.pair_id},
                {"sentence1_tokens", p.premise},
                {"sentence2_tokens", p.hypothesis}};
    out << record.dump() << '\n';
  }
}

void write_jsonl(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_jsonl(out, split);
}

}  // namespace clinli::data
