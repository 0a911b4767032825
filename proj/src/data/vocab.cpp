#include "clinli/data/vocab.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "clinli/error.hpp"

namespace clinli::data {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

std::int64_t Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<std::int64_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<std::int64_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int64_t Vocabulary::index(std::string_view token) const { return find(token).value_or(kUnk); }

Vocabulary build_vocab(const DatasetSplit& train, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count", "must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& p : train.pairs) {
    for (const auto& t : p.premise) ++counts[t];
    for (const auto& t : p.hypothesis) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [token, n] : ranked)
    if (n >= min_count) vocab.add(token);
  return vocab;
}

Batch make_batch(std::span<const NliPair* const> pairs, const Vocabulary& vocab) {
  Batch batch;
  batch.size = pairs.size();
  for (const auto* p : pairs) {
    batch.premise_len = std::max(batch.premise_len, p->premise.size());
    batch.hypothesis_len = std::max(batch.hypothesis_len, p->hypothesis.size());
  }
  auto fill = [&](std::size_t len, auto member, std::vector<std::int64_t>& ids, ad::Mask& mask,
                  std::vector<Tokens>& surface) {
    ids.assign(batch.size * len, Vocabulary::kPad);
    mask.shape = {batch.size, len};
    mask.valid.assign(batch.size * len, 0);
    for (std::size_t b = 0; b < batch.size; ++b) {
      const Tokens& tokens = pairs[b]->*member;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        ids[b * len + t] = vocab.index(tokens[t]);
        mask.valid[b * len + t] = 1;
      }
      surface.push_back(tokens);
    }
  };
  fill(batch.premise_len, &NliPair::premise, batch.premise_ids, batch.premise_mask, batch.premise_tokens);
  fill(batch.hypothesis_len, &NliPair::hypothesis, batch.hypothesis_ids, batch.hypothesis_mask,
       batch.hypothesis_tokens);
  for (const auto* p : pairs) {
    batch.labels.push_back(label_index(p->label));
    batch.pair_ids.push_back(p->pair_id);
  }
  return batch;
}

std::vector<Batch> batchify(const std::vector<NliPair>& pairs, const Vocabulary& vocab, const BatchOptions& options) {
  if (options.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    std::vector<const NliPair*> members;
    for (std::size_t k = start; k < std::min(order.size(), start + options.batch_size); ++k)
      members.push_back(&pairs[order[k]]);
    batches.push_back(make_batch(members, vocab));
  }
  return batches;
}

}  // namespace clinli::data
