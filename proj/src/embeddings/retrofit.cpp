#include "clinli/embeddings/retrofit.hpp"

#include <fstream>

#include "clinli/error.hpp"
#include "json.hpp"

namespace clinli::emb {

using nlohmann::json;

void LexicalAdjacency::add_edge(const std::string& a, const std::string& b, double weight) {
  if (a == b) return;
  if (!(weight >= 0.0)) throw ConfigError("weights", "edge weight must be >= 0");
  adj_[a][b] = weight;
  adj_[b][a] = weight;
}

std::size_t LexicalAdjacency::edge_count() const {
  std::size_t n = 0;
  for (const auto& [t, nb] : adj_) n += nb.size();
  return n / 2;
}

LexicalAdjacency read_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open adjacency " + path.string());
  LexicalAdjacency adj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto token = j.at("token").get<std::string>();
      const auto neighbors = j.at("neighbors").get<std::vector<std::string>>();
      std::vector<double> weights(neighbors.size(), 1.0);
      if (j.contains("weights")) weights = j["weights"].get<std::vector<double>>();
      if (weights.size() != neighbors.size()) throw ParseError("weights and neighbors differ in length", line_no);
      for (std::size_t k = 0; k < neighbors.size(); ++k) adj.add_edge(token, neighbors[k], weights[k]);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad adjacency record: ") + e.what(), line_no);
    }
  }
  return adj;
}

void write_adjacency(const std::filesystem::path& path, const LexicalAdjacency& adjacency) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write adjacency " + path.string());
  for (const auto& [token, nb] : adjacency.neighbors()) {
    json j{{"token", token}, {"neighbors", json::array()}, {"weights", json::array()}};
    for (const auto& [other, w] : nb) {
      j["neighbors"].push_back(other);
      j["weights"].push_back(w);
    }
    out << j.dump() << '\n';
  }
}

namespace {

void check(const RetrofitConfig& c) {
  if (!(c.alpha > 0.0)) throw ConfigError("alpha", "must be > 0");
  if (!(c.beta >= 0.0)) throw ConfigError("beta", "must be >= 0");
  if (c.iterations < 1) throw ConfigError("iterations", "must be >= 1");
}

struct Edge {
  std::size_t j;
  double beta;
};

// Per-row neighbor lists restricted to tokens present in the matrix.
std::vector<std::vector<Edge>> resolve(const EmbeddingMatrix& m, const LexicalAdjacency& adj, const RetrofitConfig& c) {
  std::vector<std::vector<Edge>> out(m.size());
  for (const auto& [token, nb] : adj.neighbors()) {
    auto i = m.find(token);
    if (!i) continue;
    for (const auto& [other, w] : nb)
      if (auto j = m.find(other)) out[*i].push_back({*j, c.beta * w});
    if (c.beta_mode == BetaMode::inverse_degree && !out[*i].empty()) {
      const double deg = static_cast<double>(out[*i].size());
      for (auto& e : out[*i]) e.beta /= deg;
    }
  }
  return out;
}

}  // namespace

RetrofitResult retrofit(const EmbeddingMatrix& matrix, const LexicalAdjacency& adjacency,
                        const RetrofitConfig& config) {
  check(config);
  const auto edges = resolve(matrix, adjacency, config);
  std::vector<std::size_t> order;
  for (const auto& [token, nb] : adjacency.neighbors())
    if (auto i = matrix.find(token); i && !edges[*i].empty()) order.push_back(*i);

  RetrofitResult result{matrix, {}};
  auto& q = result.matrix;
  const std::size_t dim = matrix.dim();
  result.objective.push_back(retrofit_objective(q, matrix, adjacency, config));
  std::vector<double> acc(dim);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t i : order) {
      auto anchor = matrix.row(i);
      double denom = config.alpha;
      for (std::size_t k = 0; k < dim; ++k) acc[k] = config.alpha * anchor[k];
      for (const auto& e : edges[i]) {
        auto other = q.row(e.j);
        for (std::size_t k = 0; k < dim; ++k) acc[k] += e.beta * other[k];
        denom += e.beta;
      }
      if (denom == config.alpha) continue;  // zero-weight neighbours exert no pull
      auto row = q.mutable_row(i);
      for (std::size_t k = 0; k < dim; ++k) row[k] = acc[k] / denom;
    }
    result.objective.push_back(retrofit_objective(q, matrix, adjacency, config));
  }
  q.set_provenance(matrix.provenance().empty() ? "retrofit" : matrix.provenance() + "+retrofit");
  return result;
}

double retrofit_objective(const EmbeddingMatrix& matrix, const EmbeddingMatrix& original,
                          const LexicalAdjacency& adjacency, const RetrofitConfig& config) {
  if (matrix.size() != original.size() || matrix.dim() != original.dim())
    throw ShapeError("retrofit_objective: matrix and original differ in shape");
  double total = 0.0;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto a = matrix.row(i), b = original.row(i);
    for (std::size_t k = 0; k < a.size(); ++k) total += config.alpha * (a[k] - b[k]) * (a[k] - b[k]);
  }
  const auto edges = resolve(matrix, adjacency, config);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto a = matrix.row(i);
    for (const auto& e : edges[i]) {
      auto b = matrix.row(e.j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
      total += 0.5 * e.beta * d2;
    }
  }
  return total;
}

}  // namespace clinli::emb
