#include "clinli/autodiff/adam.hpp"

#include <cmath>

#include "clinli/error.hpp"

namespace clinli::ad {

void Adam::step(ParameterStore& params, const Filter& include) {
  for (auto& [name, p] : params) {
    if (!p.requires_grad() || (include && !include(name))) continue;
    for (double g : p.grad())
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in parameter " + name);
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (auto& [name, p] : params) {
    if (!p.requires_grad() || (include && !include(name))) continue;
    auto& slot = slots_[name];
    if (slot.m.size() != p.size()) {
      slot.m.assign(p.size(), 0.0);
      slot.v.assign(p.size(), 0.0);
      slot.t = 0;
    }
    ++slot.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.t));
    auto g = p.grad();
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g[i];
      slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = slot.m[i] / c1;
      const double v_hat = slot.v[i] / c2;
      w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

const AdamSlot* Adam::slot(std::string_view name) const {
  auto it = slots_.find(name);
  return it == slots_.end() ? nullptr : &it->second;
}

}  // namespace clinli::ad
