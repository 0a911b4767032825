#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/embeddings/embedding_matrix.hpp"
#include "json.hpp"

namespace clinli::emb {

using Corpus = std::vector<data::Tokens>;

struct SkipgramConfig {
  std::size_t dim = 50;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.05;
  std::size_t min_count = 1;
  SubwordConfig subwords;
  std::uint64_t seed = 1;
};

/// Reads the documented keys (window, negatives, epochs, lr, dim, ngram_min,
/// ngram_max, buckets, min_count, seed); unknown keys raise ConfigError.
SkipgramConfig skipgram_config_from_json(const nlohmann::json& j);
nlohmann::json skipgram_config_to_json(const SkipgramConfig& config);
void validate(const SkipgramConfig& config);

struct SkipgramResult {
  EmbeddingMatrix matrix;
  std::vector<double> epoch_loss;  // mean negative-sampling loss per epoch
};

/// Skip-gram with negative sampling. A token's input representation is its
/// word vector plus the sum of its hashed n-gram vectors; that sum is the
/// stored token vector. The dynamic window is drawn from [1, window] and the
/// learning rate decays linearly to zero over all epochs. Deterministic given
/// the seed. Throws Error on an empty corpus.
SkipgramResult train_subword_skipgram(const Corpus& corpus, const SkipgramConfig& config);

struct NamedCorpus {
  std::string name;
  Corpus sentences;
};

/// Continues training from `init` on each corpus in order. New tokens start
/// from init.lookup (n-gram composition, else seeded fallback); n-gram
/// corrections start at zero, so zero epochs leave known vectors bit-exact.
/// Provenance becomes "<init>→<c1>→<c2>...". Throws ShapeError when the
/// config dim differs from init.
SkipgramResult fine_tune_chain(const EmbeddingMatrix& init, const std::vector<NamedCorpus>& corpora,
                               const SkipgramConfig& config);

/// Whitespace-tokenized lines of a text file, lowercased through the
/// project tokenizer; blank lines are skipped.
Corpus read_corpus(const std::string& path);

}  // namespace clinli::emb
