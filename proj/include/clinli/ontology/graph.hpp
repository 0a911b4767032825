#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clinli/data/nli.hpp"

namespace clinli::onto {

struct Concept {
  std::string id;
  std::string name;
  std::vector<std::string> synonyms;  // surface strings, tokenized on load
  std::string semantic_type;

  bool operator==(const Concept&) const = default;
};

struct ConceptEdge {
  std::string from;
  std::string to;
  std::string relation;

  bool operator==(const ConceptEdge&) const = default;
};

/// Concepts with surface forms and typed edges. Edges are kept as written
/// but treated as undirected for every path query.
class ConceptGraph {
 public:
  /// Throws Error on a duplicate id.
  void add_concept(Concept node);
  /// Throws Error naming the edge when either end is unknown.
  void add_edge(const std::string& from, const std::string& to, const std::string& relation);

  std::size_t size() const noexcept { return concepts_.size(); }
  const std::vector<Concept>& concepts() const noexcept { return concepts_; }
  const std::vector<ConceptEdge>& edges() const noexcept { return edges_; }
  const Concept& concept_at(std::size_t index) const { return concepts_.at(index); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Number of distinct undirected neighbours.
  std::size_t degree(std::string_view id) const;
  const std::vector<std::size_t>& neighbors(std::size_t index) const { return adjacency_.at(index); }

  /// Surface forms (name first, then synonyms) as lowercase token lists.
  const std::vector<data::Tokens>& surface_forms(std::size_t index) const { return surfaces_.at(index); }

 private:
  std::vector<Concept> concepts_;
  std::vector<ConceptEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::vector<data::Tokens>> surfaces_;
};

/// JSON lines, one concept per line:
/// {id, name, synonyms:[...], semantic_type, edges:[{to, relation}]}.
/// Edges may point forward to concepts defined later in the file.
ConceptGraph load_graph(const std::filesystem::path& path);
ConceptGraph parse_graph_jsonl(std::string_view text, const std::string& source = "<string>");
/// Writes each edge under its `from` concept, in insertion order.
void save_graph(const std::filesystem::path& path, const ConceptGraph& graph);
std::string graph_to_jsonl(const ConceptGraph& graph);

/// Flat TSV: concepts file `id<TAB>name<TAB>type[<TAB>synonym|synonym...]`
/// and edges file `from<TAB>to<TAB>relation`. `#` lines are comments.
ConceptGraph load_graph_tsv(const std::filesystem::path& concepts, const std::filesystem::path& edges);
void save_graph_tsv(const std::filesystem::path& concepts, const std::filesystem::path& edges,
                    const ConceptGraph& graph);

/// The bundled ~45-concept demo graph.
ConceptGraph demo_graph();

/// Either a `.jsonl` path, a `concepts.tsv,edges.tsv` pair, or "demo".
ConceptGraph load_graph_spec(const std::string& spec);

inline constexpr std::size_t kUnreachable = static_cast<std::size_t>(-1);

/// BFS hop counts from `source` to every concept (kUnreachable when none).
std::vector<std::size_t> distances_from(const ConceptGraph& graph, std::size_t source);

/// Undirected BFS distance; 0 for the same concept, nullopt when
/// disconnected. Throws Error on an unknown id.
std::optional<std::size_t> shortest_path_len(const ConceptGraph& graph, std::string_view a, std::string_view b);

}  // namespace clinli::onto
