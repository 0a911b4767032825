#pragma once

#include <cstddef>
#include <vector>

#include "clinli/data/nli.hpp"
#include "json.hpp"

namespace clinli::data {

struct LengthSummary {
  double mean = 0.0;
  std::size_t max = 0;
  // counts[i] covers [edges[i], edges[i+1]); the last bucket is open-ended.
  std::vector<std::size_t> histogram;
};

struct SplitStats {
  SplitName name = SplitName::train;
  std::size_t pairs = 0;
  LengthSummary premise;
  LengthSummary hypothesis;
};

struct StatsOptions {
  std::vector<std::size_t> histogram_edges{0, 5, 10, 15, 20, 30, 40, 60, 100};
};

struct DatasetStats {
  std::vector<std::size_t> edges;
  std::vector<SplitStats> splits;  // train, dev, test
  SplitStats overall;
};

/// Throws Error when every split is empty and ConfigError when the edges are
/// not strictly increasing.
DatasetStats dataset_stats(const Dataset& dataset, const StatsOptions& options = {});

nlohmann::json stats_to_json(const DatasetStats& stats);

}  // namespace clinli::data
