#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clinli/autodiff/parameters.hpp"

namespace clinli::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter moment estimates and step count.
struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

/// Adam with bias correction. Slots are keyed by parameter name.
class Adam {
 public:
  using Filter = std::function<bool(std::string_view)>;

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates every trainable parameter accepted by `include` (all when empty) from its
  /// accumulated gradient. Throws NumericError naming the first parameter whose
  /// gradient is not finite; no parameter is modified in that case.
  void step(ParameterStore& params, const Filter& include = {});

  void reset() { slots_.clear(); }
  const AdamConfig& config() const { return config_; }
  const AdamSlot* slot(std::string_view name) const;

 private:
  AdamConfig config_;
  std::map<std::string, AdamSlot, std::less<>> slots_;
};

}  // namespace clinli::ad
