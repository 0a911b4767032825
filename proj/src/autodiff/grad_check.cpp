#include "clinli/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace clinli::ad {

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParameterStore& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Tape tape;
    Tensor loss = loss_fn(tape);
    tape.backward(loss);
  }
  auto evaluate = [&] {
    Tape tape;
    tape.set_recording(false);
    return loss_fn(tape).item();
  };

  GradCheckReport report;
  for (auto& [name, p] : params) {
    if (!p.requires_grad()) continue;
    ParamGradReport entry{name};
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + options.step;
      const double up = evaluate();
      values[i] = original - options.step;
      const double down = evaluate();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double abs_err = std::fabs(analytic[i] - numeric);
      const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), options.magnitude_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
      ++entry.entries;
    }
    entry.passed = entry.max_rel_error < options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.passed = report.passed && entry.passed;
    report.params.push_back(std::move(entry));
  }
  params.zero_grad();
  return report;
}

}  // namespace clinli::ad
