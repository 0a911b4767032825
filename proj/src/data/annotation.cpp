#include "clinli/data/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "clinli/data/text.hpp"
#include "clinli/error.hpp"
#include "clinli/generated/resources.hpp"
#include "json.hpp"

namespace clinli::data {

using nlohmann::json;

std::string_view annotation_instructions() { return resources::kAnnotationPrompt; }

AnnotationBatch prepare_annotation_batch(const std::vector<std::string>& sentences, std::size_t n, std::uint64_t seed) {
  if (n > sentences.size()) {
    throw ConfigError("n", "requested " + std::to_string(n) + " premises but only " +
                               std::to_string(sentences.size()) + " candidates are available");
  }
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform sample in random order.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  AnnotationBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    PremiseCandidate c{"premise-" + std::to_string(order[i]), sentences[order[i]]};
    if (i) batch.prompt_text += "\n\n";
    batch.prompt_text += "premise_id: " + c.premise_id + "\n";
    batch.prompt_text += annotation_instructions();
    batch.prompt_text += "\nSentence: " + c.text;
    batch.premises.push_back(std::move(c));
  }
  if (n) batch.prompt_text += "\n";
  return batch;
}

std::optional<Judgment> parse_judgment(std::string_view text) {
  if (text == "definitely-true") return Judgment::definitely_true;
  if (text == "maybe-true") return Judgment::maybe_true;
  if (text == "definitely-false") return Judgment::definitely_false;
  return std::nullopt;
}

Label judgment_label(Judgment judgment) {
  switch (judgment) {
    case Judgment::definitely_true: return Label::entailment;
    case Judgment::maybe_true: return Label::neutral;
    case Judgment::definitely_false: return Label::contradiction;
  }
  return Label::neutral;
}

std::vector<AnnotationRecord> read_annotation_records(const std::filesystem::path& path,
                                                      const std::map<std::string, std::string>& premises) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotation file " + path.string());
  std::vector<AnnotationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("premise_id") || !j["premise_id"].is_string()) {
      throw ParseError("annotation record needs a string premise_id", line_no);
    }
    AnnotationRecord r;
    r.premise_id = j["premise_id"].get<std::string>();
    if (j.contains("premise") && j["premise"].is_string()) {
      r.premise = j["premise"].get<std::string>();
    } else if (auto it = premises.find(r.premise_id); it != premises.end()) {
      r.premise = it->second;
    }
    for (Label l : kLabels) {
      const std::string key = "hypothesis_" + std::string(label_name(l));
      if (j.contains(key) && j[key].is_string() && !j[key].get<std::string>().empty()) {
        r.hypotheses[l] = j[key].get<std::string>();
      }
    }
    r.annotator_id = j.value("annotator_id", "");
    r.invalid = j.value("invalid", false);
    r.invalid_reason = j.value("invalid_reason", "");
    if (j.contains("judgments")) {
      for (auto& [key, value] : j["judgments"].items()) {
        const auto label = parse_label(key);
        const auto verdict = value.is_string() ? parse_judgment(value.get<std::string>()) : std::nullopt;
        if (!label || !verdict) throw ParseError("bad judgment " + key + ": " + value.dump(), line_no);
        r.judgments[*label] = *verdict;
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

IngestResult ingest_annotations(const std::vector<AnnotationRecord>& records) {
  IngestResult result;
  for (const auto& r : records) {
    if (r.invalid) {
      result.discarded.push_back({r.premise_id, r.invalid_reason.empty() ? "flagged invalid" : r.invalid_reason});
      continue;
    }
    const Tokens premise = tokenize(r.premise);
    if (premise.empty()) {
      result.discarded.push_back({r.premise_id, "missing premise text"});
      continue;
    }
    std::string missing;
    for (Label l : kLabels) {
      auto it = r.hypotheses.find(l);
      if (it == r.hypotheses.end() || tokenize(it->second).empty()) {
        missing = std::string(label_name(l));
        break;
      }
    }
    if (!missing.empty()) {
      result.discarded.push_back({r.premise_id, "missing hypothesis for " + missing});
      continue;
    }
    for (Label l : kLabels) {
      result.pairs.push_back(
          {r.premise_id + "-" + std::string(label_name(l)), premise, tokenize(r.hypotheses.at(l)), l});
    }
  }
  return result;
}

double cohens_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.empty()) throw Error("cohens_kappa: empty input");
  if (a.size() != b.size()) throw Error("cohens_kappa: sequences differ in length");
  const double n = static_cast<double>(a.size());
  double counts_a[kNumLabels] = {}, counts_b[kNumLabels] = {};
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    counts_a[label_index(a[i])] += 1.0;
    counts_b[label_index(b[i])] += 1.0;
    agree += a[i] == b[i] ? 1.0 : 0.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (std::size_t k = 0; k < kNumLabels; ++k) p_e += (counts_a[k] / n) * (counts_b[k] / n);
  if (p_e == 1.0) {
    if (p_o == 1.0) return 1.0;
    throw Error("cohens_kappa: degenerate chance agreement");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

std::pair<std::vector<Label>, std::vector<Label>> agreement_labels(const std::vector<AnnotationRecord>& records) {
  std::pair<std::vector<Label>, std::vector<Label>> out;
  for (const auto& r : records) {
    if (r.invalid) continue;
    for (const auto& [label, verdict] : r.judgments) {
      out.first.push_back(label);
      out.second.push_back(judgment_label(verdict));
    }
  }
  return out;
}

}  // namespace clinli::data
