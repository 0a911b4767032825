#include "clinli/embeddings/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "clinli/data/text.hpp"
#include "clinli/error.hpp"

namespace clinli::emb {

using nlohmann::json;

void validate(const SkipgramConfig& c) {
  if (c.dim < 1) throw ConfigError("dim", "must be >= 1");
  if (c.window < 1) throw ConfigError("window", "must be >= 1");
  if (c.negatives < 1) throw ConfigError("negatives", "must be >= 1");
  if (!(c.lr >= 0.0)) throw ConfigError("lr", "must be >= 0");
  if (c.min_count < 1) throw ConfigError("min_count", "must be >= 1");
  if (c.subwords.min_n < 1 || c.subwords.max_n < c.subwords.min_n)
    throw ConfigError("ngram_min", "need 1 <= ngram_min <= ngram_max");
  if (c.subwords.buckets < 1) throw ConfigError("buckets", "must be >= 1");
}

SkipgramConfig skipgram_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "embedding training config must be a JSON object");
  SkipgramConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dim") c.dim = value.get<std::size_t>();
      else if (key == "window") c.window = value.get<std::size_t>();
      else if (key == "negatives") c.negatives = value.get<std::size_t>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "min_count") c.min_count = value.get<std::size_t>();
      else if (key == "ngram_min") c.subwords.min_n = value.get<std::size_t>();
      else if (key == "ngram_max") c.subwords.max_n = value.get<std::size_t>();
      else if (key == "buckets") c.subwords.buckets = value.get<std::uint32_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError(key, "unknown embedding training key");
    } catch (const json::exception&) {
      throw ConfigError(key, "wrong value type: " + value.dump());
    }
  }
  validate(c);
  return c;
}

json skipgram_config_to_json(const SkipgramConfig& c) {
  return {{"dim", c.dim},           {"window", c.window},       {"negatives", c.negatives},
          {"epochs", c.epochs},     {"lr", c.lr},               {"min_count", c.min_count},
          {"ngram_min", c.subwords.min_n}, {"ngram_max", c.subwords.max_n}, {"buckets", c.subwords.buckets},
          {"seed", c.seed}};
}

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

struct CorpusIndex {
  std::vector<std::string> words;
  std::vector<std::size_t> counts;
  std::vector<std::vector<std::size_t>> sentences;
  std::size_t total = 0;
};

CorpusIndex index_corpus(const Corpus& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : corpus)
    for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& kv : counts)
    if (kv.second >= min_count) ranked.push_back(kv);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  CorpusIndex idx;
  std::map<std::string, std::size_t> id;
  for (const auto& [w, n] : ranked) {
    id.emplace(w, idx.words.size());
    idx.words.push_back(w);
    idx.counts.push_back(n);
  }
  for (const auto& s : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : s)
      if (auto it = id.find(t); it != id.end()) ids.push_back(it->second);
    idx.total += ids.size();
    if (ids.size() > 1) idx.sentences.push_back(std::move(ids));
  }
  return idx;
}

// Input vectors are word + sum of bucket vectors; outputs start at zero.
struct Trainer {
  std::size_t dim;
  std::vector<double> word_in;
  std::vector<double> out;
  std::unordered_map<std::uint32_t, std::vector<double>> buckets;
  std::vector<std::vector<double*>> word_buckets;

  void input(std::size_t w, std::vector<double>& h) const {
    std::copy_n(word_in.begin() + static_cast<std::ptrdiff_t>(w * dim), dim, h.begin());
    for (const double* b : word_buckets[w])
      for (std::size_t k = 0; k < dim; ++k) h[k] += b[k];
  }
};

std::vector<double> train(Trainer& m, const CorpusIndex& idx, const SkipgramConfig& c, std::mt19937_64& rng) {
  std::vector<double> epoch_loss;
  if (idx.sentences.empty() || c.epochs == 0) return std::vector<double>(c.epochs, 0.0);
  std::vector<double> weights;
  for (auto n : idx.counts) weights.push_back(std::pow(static_cast<double>(n), 0.75));
  std::discrete_distribution<std::size_t> negative(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> window(1, c.window);
  const double total_steps = static_cast<double>(c.epochs) * static_cast<double>(idx.total);
  std::vector<double> h(m.dim), grad(m.dim);
  double processed = 0.0;
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t examples = 0;
    for (const auto& sent : idx.sentences) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos, processed += 1.0) {
        const double lr = c.lr * std::max(0.0, 1.0 - processed / total_steps);
        const std::size_t span = window(rng);
        const std::size_t center = sent[pos];
        for (std::size_t ctx = pos >= span ? pos - span : 0; ctx <= std::min(sent.size() - 1, pos + span); ++ctx) {
          if (ctx == pos) continue;
          m.input(center, h);
          std::fill(grad.begin(), grad.end(), 0.0);
          auto update = [&](std::size_t target, double label) {
            double* u = m.out.data() + target * m.dim;
            double score = 0.0;
            for (std::size_t k = 0; k < m.dim; ++k) score += u[k] * h[k];
            loss -= label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
            const double g = lr * (label - sigmoid(score));
            for (std::size_t k = 0; k < m.dim; ++k) {
              grad[k] += g * u[k];
              u[k] += g * h[k];
            }
          };
          update(sent[ctx], 1.0);
          for (std::size_t n = 0; n < c.negatives; ++n) {
            const std::size_t neg = negative(rng);
            if (neg != sent[ctx]) update(neg, 0.0);
          }
          double* w = m.word_in.data() + center * m.dim;
          for (std::size_t k = 0; k < m.dim; ++k) w[k] += grad[k];
          for (double* b : m.word_buckets[center])
            for (std::size_t k = 0; k < m.dim; ++k) b[k] += grad[k];
          ++examples;
        }
      }
    }
    epoch_loss.push_back(examples ? loss / static_cast<double>(examples) : 0.0);
  }
  for (double v : m.word_in)
    if (!std::isfinite(v)) throw NumericError("skip-gram training diverged (non-finite vectors); lower lr");
  return epoch_loss;
}

void attach_buckets(Trainer& m, const CorpusIndex& idx, const SubwordConfig& sc,
                    const std::function<std::vector<double>(std::uint32_t)>& init) {
  m.word_buckets.assign(idx.words.size(), {});
  for (std::size_t w = 0; w < idx.words.size(); ++w) {
    for (auto b : subword_buckets(idx.words[w], sc)) {
      auto it = m.buckets.find(b);
      if (it == m.buckets.end()) it = m.buckets.emplace(b, init(b)).first;
      m.word_buckets[w].push_back(it->second.data());
    }
  }
}

std::vector<double> composed(const Trainer& m, std::size_t w) {
  std::vector<double> h(m.dim);
  m.input(w, h);
  return h;
}

}  // namespace

SkipgramResult train_subword_skipgram(const Corpus& corpus, const SkipgramConfig& config) {
  validate(config);
  const auto idx = index_corpus(corpus, config.min_count);
  if (idx.words.empty()) throw Error("train_subword_skipgram: corpus is empty");
  std::mt19937_64 rng(config.seed);
  const double range = 1.0 / static_cast<double>(config.dim);
  std::uniform_real_distribution<double> u(-range, range);
  Trainer m{config.dim, {}, std::vector<double>(idx.words.size() * config.dim, 0.0), {}, {}};
  m.word_in.resize(idx.words.size() * config.dim);
  for (auto& v : m.word_in) v = u(rng);
  attach_buckets(m, idx, config.subwords, [&](std::uint32_t b) {
    std::mt19937_64 brng(config.seed ^ (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(b) + 1)));
    std::vector<double> v(config.dim);
    for (auto& x : v) x = u(brng);
    return v;
  });

  SkipgramResult result{EmbeddingMatrix(config.dim, "skipgram"), train(m, idx, config, rng)};
  for (std::size_t w = 0; w < idx.words.size(); ++w) result.matrix.add(idx.words[w], composed(m, w));
  result.matrix.set_subwords(SubwordTable{config.subwords, config.dim, std::move(m.buckets)});
  return result;
}

SkipgramResult fine_tune_chain(const EmbeddingMatrix& init, const std::vector<NamedCorpus>& corpora,
                               const SkipgramConfig& config) {
  validate(config);
  if (init.dim() != config.dim) {
    throw ShapeError("fine_tune_chain: init dim " + std::to_string(init.dim()) + " differs from config dim " +
                     std::to_string(config.dim));
  }
  SkipgramResult result{init, {}};
  auto& current = result.matrix;
  if (current.provenance().empty()) current.set_provenance("init");
  std::mt19937_64 rng(config.seed);
  for (const auto& corpus : corpora) {
    const auto idx = index_corpus(corpus.sentences, config.min_count);
    for (const auto& w : idx.words)
      if (!current.contains(w)) current.add(w, current.lookup(w));

    Trainer m{config.dim, {}, std::vector<double>(idx.words.size() * config.dim, 0.0), {}, {}};
    std::vector<std::size_t> rows;
    for (const auto& w : idx.words) {
      rows.push_back(*current.find(w));
      auto r = current.row(rows.back());
      m.word_in.insert(m.word_in.end(), r.begin(), r.end());
    }
    SubwordConfig sc = current.subwords() ? current.subwords()->config : config.subwords;
    attach_buckets(m, idx, sc, [&](std::uint32_t) { return std::vector<double>(config.dim, 0.0); });
    auto losses = train(m, idx, config, rng);
    result.epoch_loss.insert(result.epoch_loss.end(), losses.begin(), losses.end());

    for (std::size_t w = 0; w < idx.words.size() && config.epochs > 0; ++w) {
      auto v = composed(m, w);
      std::copy(v.begin(), v.end(), current.mutable_row(rows[w]).begin());
    }
    SubwordTable table = current.subwords() ? *current.subwords() : SubwordTable{sc, config.dim, {}};
    for (auto& [b, delta] : m.buckets) {
      auto& slot = table.vectors[b];
      if (slot.empty()) slot.assign(config.dim, 0.0);
      for (std::size_t k = 0; k < config.dim; ++k) slot[k] += delta[k];
    }
    current.set_subwords(std::move(table));
    current.set_provenance(current.provenance() + "→" + corpus.name);
  }
  return result;
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto t = data::tokenize(line);
    if (!t.empty()) corpus.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace clinli::emb
