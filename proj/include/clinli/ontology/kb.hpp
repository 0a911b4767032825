#pragma once

#include <array>
#include <string>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/data/vocab.hpp"
#include "clinli/embeddings/retrofit.hpp"
#include "clinli/ontology/graph.hpp"

namespace clinli::onto {

struct ConceptMatch {
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
  std::size_t concept_index = 0;
  std::string concept_id;
  data::Tokens surface;

  bool operator==(const ConceptMatch&) const = default;
};

/// Dictionary tagger: left-to-right, the longest surface form starting at
/// each position wins (ties go to the earlier concept), then the scan skips
/// past it. Case-insensitive.
class ConceptMatcher {
 public:
  explicit ConceptMatcher(const ConceptGraph& graph);
  std::vector<ConceptMatch> match(const data::Tokens& tokens) const;

 private:
  struct Node {
    std::map<std::string, std::size_t> next;
    std::optional<std::size_t> concept_index;
  };
  const ConceptGraph* graph_;
  std::vector<Node> trie_;
};

std::vector<ConceptMatch> match_concepts(const data::Tokens& tokens, const ConceptGraph& graph);

inline constexpr std::size_t kDefaultPathCap = 8;

/// Shortest-path lengths between concept indices, memoized per source.
class PathTable {
 public:
  explicit PathTable(const ConceptGraph& graph) : graph_(&graph) {}
  /// kUnreachable when disconnected.
  std::size_t distance(std::size_t a, std::size_t b);

 private:
  const ConceptGraph* graph_;
  std::map<std::size_t, std::vector<std::size_t>> rows_;
};

/// counts[0..cap] are minimum path lengths (longer paths land in `cap`);
/// counts[cap+1] counts pairs with no concepts on a side or no connection.
struct PathHistogram {
  std::size_t cap = kDefaultPathCap;
  std::vector<std::size_t> counts;
};

PathHistogram path_histogram(const std::vector<data::NliPair>& pairs, const ConceptGraph& graph,
                             std::size_t cap = kDefaultPathCap);

inline constexpr std::size_t kOntologyFeatureCount = 10;
const std::array<std::string, kOntologyFeatureCount>& ontology_feature_names();

/// Concept counts (premise, hypothesis), shared distinct concepts, min/max/
/// mean cross path length over reachable match pairs (sentinel cap+1 when
/// there is none; lengths clamp at cap), fraction of hypothesis and of
/// premise matches reachable from the other side, cross pairs with path <= 1,
/// cross pairs with no path.
std::array<double, kOntologyFeatureCount> ontology_pair_features(const std::vector<ConceptMatch>& premise,
                                                                   const std::vector<ConceptMatch>& hypothesis,
                                                                   const ConceptGraph& graph,
                                                                   std::size_t cap = kDefaultPathCap);

/// Knowledge-directed attention for one pair, both directions, row-major.
struct KbAttention {
  std::size_t premise_len = 0;
  std::size_t hypothesis_len = 0;
  double lambda = 1.0;
  std::vector<double> premise_to_hypothesis;  // [premise_len, hypothesis_len]
  std::vector<double> hypothesis_to_premise;  // [hypothesis_len, premise_len]
  std::vector<std::uint8_t> premise_rows;     // 1 where the row carries mass
  std::vector<std::uint8_t> hypothesis_rows;
};

/// s_ij = exp(-lambda * l_ij) between the concepts covering positions i and
/// j (zero when either is uncovered or disconnected); rows with mass are
/// normalized to sum to 1. Throws ConfigError unless lambda > 0.
KbAttention kb_attention(const data::Tokens& premise, const data::Tokens& hypothesis, const ConceptGraph& graph,
                         double lambda = 1.0);
KbAttention kb_attention(const data::Tokens& premise, const data::Tokens& hypothesis, const ConceptMatcher& matcher,
                         PathTable& paths, double lambda = 1.0);

/// out_i = sum_j w_ij * other_j for row-major w [n, m] and other [m, d].
/// Throws ShapeError on mismatched sizes.
std::vector<double> kb_attend(const std::vector<double>& weights, std::size_t n, std::size_t m,
                              const std::vector<double>& other, std::size_t d);

/// Fills batch.kb_premise_to_hypothesis [B, Lp, Lh] and
/// batch.kb_hypothesis_to_premise [B, Lh, Lp] from the surface tokens.
void attach_kb_attention(data::Batch& batch, const ConceptGraph& graph, double lambda = 1.0);

/// Token graph for retrofitting: head tokens (last token of each surface
/// form) of one concept are linked to each other and to the head tokens of
/// every concept it shares an edge with.
emb::LexicalAdjacency lexical_adjacency(const ConceptGraph& graph);

}  // namespace clinli::onto
