#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/embeddings/embedding_matrix.hpp"
#include "clinli/ontology/graph.hpp"
#include "clinli/ontology/kb.hpp"

namespace clinli::models {

inline constexpr std::size_t kFeatureCount = 35;
using FeatureVector = std::array<double, kFeatureCount>;

/// Feature names in extraction order.
const std::vector<std::string>& feature_names();
/// fnv1a64 over the newline-joined names, as lowercase hex.
std::string feature_manifest_hash();
/// One name per line, the format of data/features/manifest.txt.
std::string feature_manifest_text();

/// Smoothed inverse document frequency, idf(t) = ln((1 + N) / (1 + df(t))) + 1.
/// Every premise and hypothesis counts as one document (duplicate premises
/// counted once). Unseen tokens get the df = 0 value.
class IdfTable {
 public:
  IdfTable() = default;
  static IdfTable build(const std::vector<data::NliPair>& train);
  static IdfTable from_counts(std::size_t documents, std::map<std::string, std::size_t> df);
  double idf(const std::string& token) const;
  std::size_t documents() const { return documents_; }
  const std::map<std::string, std::size_t>& document_frequency() const { return df_; }

 private:
  std::size_t documents_ = 0;
  std::map<std::string, std::size_t> df_;
};

struct FeatureConfig {
  std::size_t bleu_max_n = 2;
  std::vector<std::string> negation_terms{"no", "not", "n't", "denies", "denied", "without", "negative", "never",
                                          "free of"};
  std::size_t path_cap = onto::kDefaultPathCap;
};

/// Sentence BLEU with uniform weights over the orders 1..max_n that have at
/// least one candidate n-gram; 0 when any such order has zero matches or the
/// candidate is empty. Brevity penalty exp(1 - r/c) when c <= r.
double bleu(const data::Tokens& candidate, const data::Tokens& reference, std::size_t max_n = 2);

std::size_t levenshtein(const std::string& a, const std::string& b);
std::size_t levenshtein(const data::Tokens& a, const data::Tokens& b);
/// |A ∩ B| / |A ∪ B| over token sets; 1 when both are empty.
double jaccard(const data::Tokens& a, const data::Tokens& b);
/// Occurrences of the terms; multiword terms match consecutive tokens.
std::size_t negation_count(const data::Tokens& tokens, const std::vector<std::string>& terms);

/// Pure given its inputs. Null embeddings or graph give zero-valued groups.
/// Degenerate cosines (a zero vector) are 0; ratios over an empty premise are 0.
class FeatureExtractor {
 public:
  FeatureExtractor(const emb::EmbeddingMatrix* embeddings, const onto::ConceptGraph* graph, IdfTable idf,
                   FeatureConfig config = {});
  FeatureVector extract(const data::NliPair& pair) const;
  std::vector<FeatureVector> extract_all(const std::vector<data::NliPair>& pairs) const;
  const IdfTable& idf() const { return idf_; }

 private:
  const emb::EmbeddingMatrix* embeddings_;
  const onto::ConceptGraph* graph_;
  IdfTable idf_;
  FeatureConfig config_;
  std::unique_ptr<onto::ConceptMatcher> matcher_;
};

FeatureVector extract_features(const data::NliPair& pair, const emb::EmbeddingMatrix* embeddings,
                               const onto::ConceptGraph* graph, const IdfTable& idf,
                               const FeatureConfig& config = {});

}  // namespace clinli::models
