#include "clinli/data/stats.hpp"

#include <algorithm>

#include "clinli/error.hpp"

namespace clinli::data {

namespace {

LengthSummary summarize(const std::vector<std::size_t>& lengths, const std::vector<std::size_t>& edges) {
  LengthSummary s;
  s.histogram.assign(edges.size(), 0);
  if (lengths.empty()) return s;
  double total = 0.0;
  for (std::size_t len : lengths) {
    total += static_cast<double>(len);
    s.max = std::max(s.max, len);
    auto it = std::upper_bound(edges.begin(), edges.end(), len);
    if (it != edges.begin()) ++s.histogram[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
  s.mean = total / static_cast<double>(lengths.size());
  return s;
}

SplitStats split_stats(SplitName name, const std::vector<const NliPair*>& pairs,
                       const std::vector<std::size_t>& edges) {
  std::vector<std::size_t> p, h;
  for (const auto* pair : pairs) {
    p.push_back(pair->premise.size());
    h.push_back(pair->hypothesis.size());
  }
  return {name, pairs.size(), summarize(p, edges), summarize(h, edges)};
}

nlohmann::json summary_json(const LengthSummary& s) {
  return {{"mean", s.mean}, {"max", s.max}, {"histogram", s.histogram}};
}

nlohmann::json split_json(const SplitStats& s) {
  return {{"pairs", s.pairs}, {"premise", summary_json(s.premise)}, {"hypothesis", summary_json(s.hypothesis)}};
}

}  // namespace

DatasetStats dataset_stats(const Dataset& dataset, const StatsOptions& options) {
  const auto& edges = options.histogram_edges;
  if (edges.empty()) throw ConfigError("histogram_edges", "must not be empty");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1]) throw ConfigError("histogram_edges", "must be strictly increasing");
  DatasetStats stats;
  stats.edges = edges;
  std::vector<const NliPair*> all;
  for (const DatasetSplit* split : {&dataset.train, &dataset.dev, &dataset.test}) {
    std::vector<const NliPair*> members;
    for (const auto& p : split->pairs) members.push_back(&p);
    all.insert(all.end(), members.begin(), members.end());
    stats.splits.push_back(split_stats(split->name, members, edges));
  }
  if (all.empty()) throw Error("dataset_stats: dataset is empty");
  stats.overall = split_stats(SplitName::train, all, edges);
  return stats;
}

nlohmann::json stats_to_json(const DatasetStats& stats) {
  nlohmann::json out{{"histogram_edges", stats.edges}, {"overall", split_json(stats.overall)}};
  for (const auto& s : stats.splits) out["splits"][std::string(split_name(s.name))] = split_json(s);
  return out;
}

}  // namespace clinli::data
