#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinli/data/nli.hpp"

namespace clinli::data {

/// Instruction text shown to annotators above every premise.
std::string_view annotation_instructions();

struct PremiseCandidate {
  std::string premise_id;
  std::string text;
};

struct AnnotationBatch {
  std::vector<PremiseCandidate> premises;  // in emitted order
  std::string prompt_text;                 // blocks separated by one blank line
};

/// Samples `n` candidates uniformly without replacement (seeded) and emits one
/// prompt block per premise. Premise ids are `premise-<candidate index>`.
/// Throws ConfigError when n exceeds the candidate count.
AnnotationBatch prepare_annotation_batch(const std::vector<std::string>& sentences, std::size_t n, std::uint64_t seed);

/// Second-annotator verdict on a hypothesis.
enum class Judgment { definitely_true, maybe_true, definitely_false };
std::optional<Judgment> parse_judgment(std::string_view text);
Label judgment_label(Judgment judgment);

struct AnnotationRecord {
  std::string premise_id;
  std::string premise;
  std::map<Label, std::string> hypotheses;  // intended label -> hypothesis text
  std::string annotator_id;
  bool invalid = false;
  std::string invalid_reason;
  std::map<Label, Judgment> judgments;  // optional second-annotator verdicts
};

/// Annotation return file: JSON lines with premise_id, premise (optional when
/// `premises` supplies it), hypothesis_entailment, hypothesis_neutral,
/// hypothesis_contradiction, invalid, invalid_reason, annotator_id and an
/// optional `judgments` object keyed by label.
std::vector<AnnotationRecord> read_annotation_records(const std::filesystem::path& path,
                                                      const std::map<std::string, std::string>& premises = {});

struct DiscardEntry {
  std::string premise_id;
  std::string reason;
};

struct IngestResult {
  std::vector<NliPair> pairs;
  std::vector<DiscardEntry> discarded;
};

/// A complete record yields three pairs (entailment, contradiction, neutral);
/// invalid or incomplete records yield none and one discard entry each.
IngestResult ingest_annotations(const std::vector<AnnotationRecord>& records);

/// Cohen's kappa over the three labels. Throws on empty or unequal input, and
/// when chance agreement is 1 while observed agreement is not.
double cohens_kappa(const std::vector<Label>& a, const std::vector<Label>& b);

/// Intended vs. second-annotator labels for every judged hypothesis.
std::pair<std::vector<Label>, std::vector<Label>> agreement_labels(const std::vector<AnnotationRecord>& records);

}  // namespace clinli::data
