#include "clinli/ontology/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "clinli/data/text.hpp"
#include "clinli/error.hpp"
#include "clinli/generated/resources.hpp"
#include "json.hpp"

namespace clinli::onto {

using nlohmann::json;

void ConceptGraph::add_concept(Concept node) {
  if (node.id.empty()) throw Error("concept id must not be empty");
  if (index_.count(node.id)) throw Error("duplicate concept id " + node.id);
  std::vector<data::Tokens> surfaces;
  auto add_surface = [&](const std::string& text) {
    auto t = data::tokenize(text);
    if (!t.empty() && std::find(surfaces.begin(), surfaces.end(), t) == surfaces.end()) surfaces.push_back(t);
  };
  add_surface(node.name);
  for (const auto& s : node.synonyms) add_surface(s);
  index_.emplace(node.id, concepts_.size());
  concepts_.push_back(std::move(node));
  adjacency_.emplace_back();
  surfaces_.push_back(std::move(surfaces));
}

void ConceptGraph::add_edge(const std::string& from, const std::string& to, const std::string& relation) {
  auto a = index_of(from), b = index_of(to);
  if (!a || !b) {
    throw Error("edge " + from + " -> " + to + " (" + relation + ") references missing concept " + (a ? to : from));
  }
  edges_.push_back({from, to, relation});
  auto link = [&](std::size_t x, std::size_t y) {
    auto& n = adjacency_[x];
    if (x != y && std::find(n.begin(), n.end(), y) == n.end()) n.push_back(y);
  };
  link(*a, *b);
  link(*b, *a);
}

std::optional<std::size_t> ConceptGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ConceptGraph::degree(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw Error("unknown concept id " + std::string(id));
  return adjacency_[*i].size();
}

ConceptGraph parse_graph_jsonl(std::string_view text, const std::string& source) {
  ConceptGraph g;
  std::vector<std::pair<std::size_t, ConceptEdge>> pending;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      Concept c;
      c.id = j.at("id").get<std::string>();
      c.name = j.value("name", c.id);
      c.synonyms = j.value("synonyms", std::vector<std::string>{});
      c.semantic_type = j.value("semantic_type", "");
      if (j.contains("edges")) {
        for (const auto& e : j["edges"])
          pending.push_back({line_no, {c.id, e.at("to").get<std::string>(), e.value("relation", "related")}});
      }
      g.add_concept(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError(source + ": bad concept record: " + e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source + ": " + e.what(), line_no);
    }
  }
  for (const auto& [ln, e] : pending) {
    try {
      g.add_edge(e.from, e.to, e.relation);
    } catch (const Error& err) {
      throw ParseError(source + ": " + err.what(), ln);
    }
  }
  return g;
}

ConceptGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ontology " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph_jsonl(buf.str(), path.string());
}

std::string graph_to_jsonl(const ConceptGraph& graph) {
  std::map<std::string, std::vector<const ConceptEdge*>> by_source;
  for (const auto& e : graph.edges()) by_source[e.from].push_back(&e);
  std::string out;
  for (const auto& c : graph.concepts()) {
    json j{{"id", c.id}, {"name", c.name}, {"synonyms", c.synonyms}, {"semantic_type", c.semantic_type},
           {"edges", json::array()}};
    for (const auto* e : by_source[c.id]) j["edges"].push_back({{"to", e->to}, {"relation", e->relation}});
    out += j.dump() + "\n";
  }
  return out;
}

void save_graph(const std::filesystem::path& path, const ConceptGraph& graph) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write ontology " + path.string());
  out << graph_to_jsonl(graph);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

template <typename Fn>
void each_tsv_row(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(split_tabs(line), line_no);
  }
}

}  // namespace

ConceptGraph load_graph_tsv(const std::filesystem::path& concepts, const std::filesystem::path& edges) {
  ConceptGraph g;
  each_tsv_row(concepts, [&](const std::vector<std::string>& f, std::size_t ln) {
    if (f.size() < 3) throw ParseError(concepts.string() + ": expected id, name, type", ln);
    Concept c{f[0], f[1], {}, f[2]};
    if (f.size() > 3 && !f[3].empty()) {
      std::size_t start = 0;
      while (true) {
        auto bar = f[3].find('|', start);
        c.synonyms.push_back(f[3].substr(start, bar == std::string::npos ? std::string::npos : bar - start));
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
    }
    try {
      g.add_concept(std::move(c));
    } catch (const Error& e) {
      throw ParseError(concepts.string() + ": " + e.what(), ln);
    }
  });
  each_tsv_row(edges, [&](const std::vector<std::string>& f, std::size_t ln) {
    if (f.size() < 2) throw ParseError(edges.string() + ": expected from, to, relation", ln);
    try {
      g.add_edge(f[0], f[1], f.size() > 2 ? f[2] : "related");
    } catch (const Error& e) {
      throw ParseError(edges.string() + ": " + e.what(), ln);
    }
  });
  return g;
}

void save_graph_tsv(const std::filesystem::path& concepts, const std::filesystem::path& edges,
                    const ConceptGraph& graph) {
  std::ofstream c(concepts), e(edges);
  if (!c || !e) throw Error("cannot write ontology TSV files");
  for (const auto& node : graph.concepts()) {
    c << node.id << '\t' << node.name << '\t' << node.semantic_type;
    if (!node.synonyms.empty()) {
      c << '\t';
      for (std::size_t i = 0; i < node.synonyms.size(); ++i) c << (i ? "|" : "") << node.synonyms[i];
    }
    c << '\n';
  }
  for (const auto& edge : graph.edges()) e << edge.from << '\t' << edge.to << '\t' << edge.relation << '\n';
}

ConceptGraph demo_graph() { return parse_graph_jsonl(resources::kDemoGraph, "<demo graph>"); }

ConceptGraph load_graph_spec(const std::string& spec) {
  if (spec == "demo") return demo_graph();
  if (auto comma = spec.find(','); comma != std::string::npos)
    return load_graph_tsv(spec.substr(0, comma), spec.substr(comma + 1));
  return load_graph(spec);
}

std::vector<std::size_t> distances_from(const ConceptGraph& graph, std::size_t source) {
  std::vector<std::size_t> dist(graph.size(), kUnreachable);
  std::deque<std::size_t> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : graph.neighbors(u)) {
      if (dist[v] != kUnreachable) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

std::optional<std::size_t> shortest_path_len(const ConceptGraph& graph, std::string_view a, std::string_view b) {
  auto ia = graph.index_of(a), ib = graph.index_of(b);
  if (!ia) throw Error("unknown concept id " + std::string(a));
  if (!ib) throw Error("unknown concept id " + std::string(b));
  const auto d = distances_from(graph, *ia)[*ib];
  if (d == kUnreachable) return std::nullopt;
  return d;
}

}  // namespace clinli::onto
