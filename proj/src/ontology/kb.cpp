#include "clinli/ontology/kb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "clinli/error.hpp"

namespace clinli::onto {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

ConceptMatcher::ConceptMatcher(const ConceptGraph& graph) : graph_(&graph), trie_(1) {
  for (std::size_t c = 0; c < graph.size(); ++c) {
    for (const auto& form : graph.surface_forms(c)) {
      std::size_t node = 0;
      for (const auto& tok : form) {
        const auto key = lower(tok);
        auto it = trie_[node].next.find(key);
        if (it == trie_[node].next.end()) {
          trie_[node].next.emplace(key, trie_.size());
          node = trie_.size();
          trie_.emplace_back();
        } else {
          node = it->second;
        }
      }
      if (!trie_[node].concept_index) trie_[node].concept_index = c;
    }
  }
}

std::vector<ConceptMatch> ConceptMatcher::match(const data::Tokens& tokens) const {
  std::vector<ConceptMatch> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t node = 0, best_end = 0;
    std::optional<std::size_t> best;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      auto it = trie_[node].next.find(lower(tokens[j]));
      if (it == trie_[node].next.end()) break;
      node = it->second;
      if (trie_[node].concept_index) {
        best = trie_[node].concept_index;
        best_end = j + 1;
      }
    }
    if (!best) {
      ++i;
      continue;
    }
    out.push_back({i, best_end, *best, graph_->concept_at(*best).id,
                   data::Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                tokens.begin() + static_cast<std::ptrdiff_t>(best_end))});
    i = best_end;
  }
  return out;
}

std::vector<ConceptMatch> match_concepts(const data::Tokens& tokens, const ConceptGraph& graph) {
  return ConceptMatcher(graph).match(tokens);
}

std::size_t PathTable::distance(std::size_t a, std::size_t b) {
  auto it = rows_.find(a);
  if (it == rows_.end()) it = rows_.emplace(a, distances_from(*graph_, a)).first;
  return it->second.at(b);
}

namespace {

struct CrossStats {
  std::size_t min = kUnreachable, max = 0, sum = 0, reachable_pairs = 0, close_pairs = 0, unreachable_pairs = 0;
  std::vector<bool> premise_reached, hypothesis_reached;
};

CrossStats cross_stats(const std::vector<ConceptMatch>& p, const std::vector<ConceptMatch>& h, PathTable& paths,
                       std::size_t cap) {
  CrossStats s;
  s.premise_reached.assign(p.size(), false);
  s.hypothesis_reached.assign(h.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      auto d = paths.distance(p[i].concept_index, h[j].concept_index);
      if (d == kUnreachable) {
        ++s.unreachable_pairs;
        continue;
      }
      d = std::min(d, cap);
      s.premise_reached[i] = s.hypothesis_reached[j] = true;
      s.min = std::min(s.min, d);
      s.max = std::max(s.max, d);
      s.sum += d;
      ++s.reachable_pairs;
      if (d <= 1) ++s.close_pairs;
    }
  }
  return s;
}

}  // namespace

PathHistogram path_histogram(const std::vector<data::NliPair>& pairs, const ConceptGraph& graph, std::size_t cap) {
  PathHistogram hist{cap, std::vector<std::size_t>(cap + 2, 0)};
  ConceptMatcher matcher(graph);
  PathTable paths(graph);
  for (const auto& pair : pairs) {
    auto s = cross_stats(matcher.match(pair.premise), matcher.match(pair.hypothesis), paths, cap);
    ++hist.counts[s.reachable_pairs ? s.min : cap + 1];
  }
  return hist;
}

const std::array<std::string, kOntologyFeatureCount>& ontology_feature_names() {
  static const std::array<std::string, kOntologyFeatureCount> names{
      "onto_premise_concepts",   "onto_hypothesis_concepts", "onto_shared_concepts",
      "onto_min_path",           "onto_max_path",            "onto_mean_path",
      "onto_hypothesis_reached", "onto_premise_reached",     "onto_pairs_within_1",
      "onto_pairs_no_path"};
  return names;
}

std::array<double, kOntologyFeatureCount> ontology_pair_features(const std::vector<ConceptMatch>& premise,
                                                                   const std::vector<ConceptMatch>& hypothesis,
                                                                   const ConceptGraph& graph, std::size_t cap) {
  PathTable paths(graph);
  const auto s = cross_stats(premise, hypothesis, paths, cap);
  std::set<std::size_t> pc, hc;
  for (const auto& m : premise) pc.insert(m.concept_index);
  for (const auto& m : hypothesis) hc.insert(m.concept_index);
  std::size_t shared = 0;
  for (auto c : pc) shared += hc.count(c);
  const double sentinel = static_cast<double>(cap + 1);
  auto fraction = [](const std::vector<bool>& v) {
    if (v.empty()) return 0.0;
    return static_cast<double>(std::count(v.begin(), v.end(), true)) / static_cast<double>(v.size());
  };
  return {static_cast<double>(premise.size()),
          static_cast<double>(hypothesis.size()),
          static_cast<double>(shared),
          s.reachable_pairs ? static_cast<double>(s.min) : sentinel,
          s.reachable_pairs ? static_cast<double>(s.max) : sentinel,
          s.reachable_pairs ? static_cast<double>(s.sum) / static_cast<double>(s.reachable_pairs) : sentinel,
          fraction(s.hypothesis_reached),
          fraction(s.premise_reached),
          static_cast<double>(s.close_pairs),
          static_cast<double>(s.unreachable_pairs)};
}

namespace {

std::vector<std::optional<std::size_t>> coverage(const std::vector<ConceptMatch>& matches, std::size_t len) {
  std::vector<std::optional<std::size_t>> out(len);
  for (const auto& m : matches)
    for (std::size_t k = m.start; k < m.end; ++k) out[k] = m.concept_index;
  return out;
}

void normalize_rows(std::vector<double>& w, std::size_t rows, std::size_t cols, std::vector<std::uint8_t>& mask) {
  mask.assign(rows, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += w[i * cols + j];
    if (total <= 0.0) continue;
    mask[i] = 1;
    for (std::size_t j = 0; j < cols; ++j) w[i * cols + j] /= total;
  }
}

}  // namespace

KbAttention kb_attention(const data::Tokens& premise, const data::Tokens& hypothesis, const ConceptMatcher& matcher,
                         PathTable& paths, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be > 0");
  KbAttention a;
  a.premise_len = premise.size();
  a.hypothesis_len = hypothesis.size();
  a.lambda = lambda;
  const auto pc = coverage(matcher.match(premise), premise.size());
  const auto hc = coverage(matcher.match(hypothesis), hypothesis.size());
  const std::size_t n = premise.size(), m = hypothesis.size();
  std::vector<double> raw(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pc[i]) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (!hc[j]) continue;
      const auto d = paths.distance(*pc[i], *hc[j]);
      if (d != kUnreachable) raw[i * m + j] = std::exp(-lambda * static_cast<double>(d));
    }
  }
  a.premise_to_hypothesis = raw;
  a.hypothesis_to_premise.assign(m * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) a.hypothesis_to_premise[j * n + i] = raw[i * m + j];
  normalize_rows(a.premise_to_hypothesis, n, m, a.premise_rows);
  normalize_rows(a.hypothesis_to_premise, m, n, a.hypothesis_rows);
  return a;
}

KbAttention kb_attention(const data::Tokens& premise, const data::Tokens& hypothesis, const ConceptGraph& graph,
                         double lambda) {
  ConceptMatcher matcher(graph);
  PathTable paths(graph);
  return kb_attention(premise, hypothesis, matcher, paths, lambda);
}

std::vector<double> kb_attend(const std::vector<double>& weights, std::size_t n, std::size_t m,
                              const std::vector<double>& other, std::size_t d) {
  if (weights.size() != n * m) throw ShapeError("kb_attend: weights are not " + std::to_string(n) + "x" + std::to_string(m));
  if (other.size() != m * d) throw ShapeError("kb_attend: other-sentence matrix is not " + std::to_string(m) + "x" + std::to_string(d));
  std::vector<double> out(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double w = weights[i * m + j];
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += w * other[j * d + k];
    }
  return out;
}

void attach_kb_attention(data::Batch& batch, const ConceptGraph& graph, double lambda) {
  ConceptMatcher matcher(graph);
  PathTable paths(graph);
  const std::size_t lp = batch.premise_len, lh = batch.hypothesis_len;
  batch.kb_premise_to_hypothesis.assign(batch.size * lp * lh, 0.0);
  batch.kb_hypothesis_to_premise.assign(batch.size * lh * lp, 0.0);
  for (std::size_t b = 0; b < batch.size; ++b) {
    auto a = kb_attention(batch.premise_tokens[b], batch.hypothesis_tokens[b], matcher, paths, lambda);
    for (std::size_t i = 0; i < a.premise_len; ++i)
      for (std::size_t j = 0; j < a.hypothesis_len; ++j) {
        batch.kb_premise_to_hypothesis[(b * lp + i) * lh + j] = a.premise_to_hypothesis[i * a.hypothesis_len + j];
        batch.kb_hypothesis_to_premise[(b * lh + j) * lp + i] = a.hypothesis_to_premise[j * a.premise_len + i];
      }
  }
}

emb::LexicalAdjacency lexical_adjacency(const ConceptGraph& graph) {
  std::vector<std::vector<std::string>> heads(graph.size());
  for (std::size_t c = 0; c < graph.size(); ++c) {
    for (const auto& form : graph.surface_forms(c)) {
      const auto& head = form.back();
      if (std::find(heads[c].begin(), heads[c].end(), head) == heads[c].end()) heads[c].push_back(head);
    }
  }
  emb::LexicalAdjacency adj;
  for (const auto& h : heads)
    for (std::size_t a = 0; a < h.size(); ++a)
      for (std::size_t b = a + 1; b < h.size(); ++b) adj.add_edge(h[a], h[b]);
  for (const auto& e : graph.edges()) {
    const auto a = *graph.index_of(e.from), b = *graph.index_of(e.to);
    for (const auto& x : heads[a])
      for (const auto& y : heads[b]) adj.add_edge(x, y);
  }
  return adj;
}

}  // namespace clinli::onto
