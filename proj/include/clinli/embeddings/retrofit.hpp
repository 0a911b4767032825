#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clinli/embeddings/embedding_matrix.hpp"

namespace clinli::emb {

/// Undirected token graph with per-edge weights (default 1). Adding an edge
/// adds both directions; self loops are ignored.
class LexicalAdjacency {
 public:
  void add_edge(const std::string& a, const std::string& b, double weight = 1.0);
  const std::map<std::string, std::map<std::string, double>>& neighbors() const noexcept { return adj_; }
  std::size_t edge_count() const;

 private:
  std::map<std::string, std::map<std::string, double>> adj_;
};

/// JSON lines {"token": t, "neighbors": [...], "weights": [...]} with
/// optional weights.
LexicalAdjacency read_adjacency(const std::filesystem::path& path);
void write_adjacency(const std::filesystem::path& path, const LexicalAdjacency& adjacency);

enum class BetaMode {
  uniform,        // beta_ij = beta * w_ij
  inverse_degree  // beta_ij = beta * w_ij / |N(i)|
};

struct RetrofitConfig {
  double alpha = 1.0;
  double beta = 1.0;
  BetaMode beta_mode = BetaMode::uniform;
  std::size_t iterations = 10;
};

struct RetrofitResult {
  EmbeddingMatrix matrix;
  std::vector<double> objective;  // before the first sweep, then after each
};

/// In-place sweeps in lexicographic token order:
///   q_i <- (alpha q̂_i + sum_j beta_ij q_j) / (alpha + sum_j beta_ij)
/// over neighbors present in the matrix. Tokens with no such neighbor keep
/// their vectors bit-exactly. Throws ConfigError on alpha <= 0, beta < 0 or
/// iterations < 1.
RetrofitResult retrofit(const EmbeddingMatrix& matrix, const LexicalAdjacency& adjacency,
                        const RetrofitConfig& config = {});

/// sum_i alpha |q_i - q̂_i|^2 + 1/2 sum_i sum_{j in N(i)} beta_ij |q_i - q_j|^2.
/// With symmetric weights (uniform mode) the second term is the sum over
/// undirected edges, and each sweep never increases the value.
double retrofit_objective(const EmbeddingMatrix& matrix, const EmbeddingMatrix& original,
                          const LexicalAdjacency& adjacency, const RetrofitConfig& config = {});

}  // namespace clinli::emb
