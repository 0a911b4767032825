#pragma once

#include <functional>
#include <string>
#include <vector>

#include "clinli/autodiff/parameters.hpp"

namespace clinli::ad {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, magnitude_floor).
  double magnitude_floor = 1e-6;
};

struct ParamGradReport {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradReport> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Compares tape gradients of a scalar closure against central finite
/// differences for every entry of every parameter in `params`. The closure
/// must be deterministic; parameter values are restored afterwards.
GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParameterStore& params,
                           const GradCheckOptions& options = {});

}  // namespace clinli::ad
