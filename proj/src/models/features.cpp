#include "clinli/models/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <set>
#include <sstream>

#include "clinli/data/text.hpp"
#include "clinli/error.hpp"

namespace clinli::models {

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"bleu_p_to_h",     "bleu_h_to_p",     "len_p",          "len_h",
                               "len_abs_diff",    "len_min",         "len_max",        "len_ratio_h_over_p",
                               "neg_count_p",     "neg_count_h",     "neg_abs_diff",   "neg_one_side",
                               "tfidf_cosine",    "tfidf_euclidean", "tfidf_manhattan", "char_levenshtein",
                               "token_levenshtein", "token_jaccard", "char_levenshtein_norm",
                               "emb_mean_cosine", "emb_mean_euclidean", "emb_mean_manhattan",
                               "emb_max_cosine",  "emb_max_euclidean", "emb_max_manhattan"};
    for (const auto& o : onto::ontology_feature_names()) n.push_back(o);
    if (n.size() != kFeatureCount) throw Error("feature name table has wrong length");
    return n;
  }();
  return names;
}

std::string feature_manifest_text() {
  std::string text;
  for (const auto& n : feature_names()) text += n + "\n";
  return text;
}

std::string feature_manifest_hash() {
  std::string joined = feature_manifest_text();
  joined.pop_back();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(emb::fnv1a64(joined)));
  return buf;
}

IdfTable IdfTable::build(const std::vector<data::NliPair>& train) {
  IdfTable t;
  std::set<data::Tokens> seen_premises;
  auto count = [&t](const data::Tokens& doc) {
    ++t.documents_;
    for (const auto& tok : std::set<std::string>(doc.begin(), doc.end())) ++t.df_[tok];
  };
  for (const auto& p : train) {
    if (seen_premises.insert(p.premise).second) count(p.premise);
    count(p.hypothesis);
  }
  return t;
}

IdfTable IdfTable::from_counts(std::size_t documents, std::map<std::string, std::size_t> df) {
  IdfTable t;
  t.documents_ = documents;
  t.df_ = std::move(df);
  return t;
}

double IdfTable::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

namespace {

std::map<data::Tokens, std::size_t> ngram_counts(const data::Tokens& t, std::size_t n) {
  std::map<data::Tokens, std::size_t> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[data::Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

struct Distances {
  double cosine, euclidean, manhattan;
};

Distances distances(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0, m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += (a[i] - b[i]) * (a[i] - b[i]);
    m += std::abs(a[i] - b[i]);
  }
  return {emb::cosine(a, b), std::sqrt(e), m};
}

}  // namespace

double bleu(const data::Tokens& candidate, const data::Tokens& reference, std::size_t max_n) {
  if (max_n < 1) throw ConfigError("bleu_max_n", "must be >= 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto cand = ngram_counts(candidate, n);
    if (cand.empty()) continue;
    auto ref = ngram_counts(reference, n);
    std::size_t matched = 0, total = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      auto it = ref.find(g);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    ++orders;
  }
  const double c = static_cast<double>(candidate.size()), r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

template <typename Seq>
static std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein(const std::string& a, const std::string& b) { return edit_distance(a, b); }
std::size_t levenshtein(const data::Tokens& a, const data::Tokens& b) { return edit_distance(a, b); }

double jaccard(const data::Tokens& a, const data::Tokens& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::size_t negation_count(const data::Tokens& tokens, const std::vector<std::string>& terms) {
  std::size_t count = 0;
  for (const auto& term : terms) {
    std::istringstream split(term);
    const data::Tokens words{std::istream_iterator<std::string>(split), std::istream_iterator<std::string>()};
    if (words.empty()) continue;
    for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < words.size() && hit; ++k) {
        std::string t = tokens[i + k];
        std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
        hit = t == words[k];
      }
      count += hit ? 1 : 0;
    }
  }
  return count;
}

FeatureExtractor::FeatureExtractor(const emb::EmbeddingMatrix* embeddings, const onto::ConceptGraph* graph,
                                   IdfTable idf, FeatureConfig config)
    : embeddings_(embeddings), graph_(graph), idf_(std::move(idf)), config_(std::move(config)) {
  if (graph_) matcher_ = std::make_unique<onto::ConceptMatcher>(*graph_);
}

FeatureVector FeatureExtractor::extract(const data::NliPair& pair) const {
  const auto& p = pair.premise;
  const auto& h = pair.hypothesis;
  FeatureVector f{};
  std::size_t k = 0;
  f[k++] = bleu(p, h, config_.bleu_max_n);
  f[k++] = bleu(h, p, config_.bleu_max_n);

  const double lp = static_cast<double>(p.size()), lh = static_cast<double>(h.size());
  f[k++] = lp;
  f[k++] = lh;
  f[k++] = std::abs(lp - lh);
  f[k++] = std::min(lp, lh);
  f[k++] = std::max(lp, lh);
  f[k++] = lp > 0 ? lh / lp : 0.0;

  const double np = static_cast<double>(negation_count(p, config_.negation_terms));
  const double nh = static_cast<double>(negation_count(h, config_.negation_terms));
  f[k++] = np;
  f[k++] = nh;
  f[k++] = std::abs(np - nh);
  f[k++] = (np > 0) != (nh > 0) ? 1.0 : 0.0;

  std::map<std::string, std::pair<double, double>> tf;
  for (const auto& t : p) tf[t].first += 1.0;
  for (const auto& t : h) tf[t].second += 1.0;
  std::vector<double> vp, vh;
  for (const auto& [tok, c] : tf) {
    const double w = idf_.idf(tok);
    vp.push_back(c.first * w);
    vh.push_back(c.second * w);
  }
  const Distances tfidf = distances(vp, vh);
  f[k++] = tfidf.cosine;
  f[k++] = tfidf.euclidean;
  f[k++] = tfidf.manhattan;

  const std::string sp = data::join_tokens(p), sh = data::join_tokens(h);
  const double lev = static_cast<double>(levenshtein(sp, sh));
  f[k++] = lev;
  f[k++] = static_cast<double>(levenshtein(p, h));
  f[k++] = jaccard(p, h);
  const double longest = static_cast<double>(std::max(sp.size(), sh.size()));
  f[k++] = longest > 0 ? lev / longest : 0.0;

  if (embeddings_) {
    const std::size_t d = embeddings_->dim();
    auto pool = [&](const data::Tokens& toks, std::vector<double>& mean, std::vector<double>& mx) {
      mean.assign(d, 0.0);
      mx.assign(d, 0.0);
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto v = embeddings_->lookup(toks[i]);
        for (std::size_t j = 0; j < d; ++j) {
          mean[j] += v[j] / static_cast<double>(toks.size());
          mx[j] = i == 0 ? v[j] : std::max(mx[j], v[j]);
        }
      }
    };
    std::vector<double> mp, xp, mh, xh;
    pool(p, mp, xp);
    pool(h, mh, xh);
    for (const Distances& dd : {distances(mp, mh), distances(xp, xh)}) {
      f[k++] = dd.cosine;
      f[k++] = dd.euclidean;
      f[k++] = dd.manhattan;
    }
  } else {
    k += 6;
  }

  if (graph_) {
    const auto onto = onto::ontology_pair_features(matcher_->match(p), matcher_->match(h), *graph_,
                                                       config_.path_cap);
    for (double v : onto) f[k++] = v;
  } else {
    const onto::ConceptGraph empty;
    for (double v : onto::ontology_pair_features({}, {}, empty, config_.path_cap)) f[k++] = v;
  }
  for (double v : f)
    if (!std::isfinite(v)) throw NumericError("non-finite feature for pair " + pair.pair_id);
  return f;
}

std::vector<FeatureVector> FeatureExtractor::extract_all(const std::vector<data::NliPair>& pairs) const {
  std::vector<FeatureVector> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(extract(p));
  return out;
}

FeatureVector extract_features(const data::NliPair& pair, const emb::EmbeddingMatrix* embeddings,
                               const onto::ConceptGraph* graph, const IdfTable& idf,
                               const FeatureConfig& config) {
  return FeatureExtractor(embeddings, graph, idf, config).extract(pair);
}

}  // namespace clinli::models
