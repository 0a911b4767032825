#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "clinli/data/nli.hpp"

namespace clinli::data {

struct ReadResult {
  DatasetSplit split;
  std::size_t skipped_unlabeled = 0;  // records with gold_label "-"
};

/// Reads SNLI-style JSON lines: gold_label, sentence1 (premise), sentence2
/// (hypothesis), pairID. Unknown fields are ignored. When the optional
/// `sentence1_tokens` / `sentence2_tokens` arrays are present they are used
/// verbatim instead of tokenizing the sentence strings.
ReadResult read_jsonl(std::istream& in, SplitName name = SplitName::train);
ReadResult read_jsonl(const std::filesystem::path& path, SplitName name = SplitName::train);

/// Writes one record per pair, including the token arrays, so that
/// read_jsonl(write_jsonl(split)) reproduces every field exactly.
void write_jsonl(std::ostream& out, const DatasetSplit& split);
void write_jsonl(const std::filesystem::path& path, const DatasetSplit& split);

}  // namespace clinli::data
