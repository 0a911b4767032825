#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clinli/autodiff/tensor.hpp"
#include "clinli/data/nli.hpp"

namespace clinli::data {

/// Token <-> index map with PAD = 0 and UNK = 1 reserved.
class Vocabulary {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  /// Returns the index of `token`, inserting it when absent.
  std::int64_t add(const std::string& token);
  std::optional<std::int64_t> find(std::string_view token) const;
  /// Index for model input; unknown tokens map to UNK.
  std::int64_t index(std::string_view token) const;
  const std::string& token(std::int64_t index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> index_;
};

/// Every train-split token with frequency >= min_count, most frequent first
/// (ties lexicographic). Dev/test tokens are deliberately not added.
Vocabulary build_vocab(const DatasetSplit& train, std::size_t min_count = 1);

/// One padded minibatch. Sequences are padded to the per-batch maximum;
/// masks are [B, L] with 1 on real tokens.
struct Batch {
  std::size_t size = 0;
  std::size_t premise_len = 0;
  std::size_t hypothesis_len = 0;
  std::vector<std::int64_t> premise_ids;
  std::vector<std::int64_t> hypothesis_ids;
  ad::Mask premise_mask;
  ad::Mask hypothesis_mask;
  std::vector<int> labels;
  std::vector<std::string> pair_ids;
  // Surface forms survive UNK mapping for ontology matching.
  std::vector<Tokens> premise_tokens;
  std::vector<Tokens> hypothesis_tokens;
  // Knowledge-directed attention weights, row-major [B, Lp, Lh] and
  // [B, Lh, Lp]; empty unless attached by the ontology module.
  std::vector<double> kb_premise_to_hypothesis;
  std::vector<double> kb_hypothesis_to_premise;

  bool has_kb() const { return !kb_premise_to_hypothesis.empty(); }
};

Batch make_batch(std::span<const NliPair* const> pairs, const Vocabulary& vocab);

struct BatchOptions {
  std::size_t batch_size = 32;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

/// Splits `pairs` into batches; with `shuffle`, the order is a permutation
/// drawn from `seed` and is identical for identical seeds.
std::vector<Batch> batchify(const std::vector<NliPair>& pairs, const Vocabulary& vocab, const BatchOptions& options);

}  // namespace clinli::data
