#pragma once

#include <array>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/models/nli_model.hpp"
#include "json.hpp"

namespace clinli::harness {

/// Confusion rows are gold labels, columns predictions, both in canonical order.
struct Metrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::array<double, data::kNumLabels> precision{};  // 0 when a class is never predicted
  std::array<double, data::kNumLabels> recall{};     // 0 when a class has no support
  std::array<std::array<std::size_t, data::kNumLabels>, data::kNumLabels> confusion{};
};

/// Throws Error on empty or unequal input.
Metrics compute_metrics(const std::vector<data::Label>& gold, const std::vector<data::Label>& predicted);
nlohmann::json metrics_to_json(const Metrics& m);

/// Sums the distributions componentwise and renormalizes; ties in the argmax go
/// to the lowest class index. Throws Error on an empty list.
models::Prediction ensemble_predict(const std::vector<models::Prediction>& predictions);

}  // namespace clinli::harness
