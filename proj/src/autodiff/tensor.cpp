#include "clinli/autodiff/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "clinli/error.hpp"

namespace clinli::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_size(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor of shape " + shape_string(shape()) + " is not a scalar");
  return impl_->data[0];
}

std::span<const double> Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>(*impl_);
  return Tensor(std::move(impl));
}

Mask Mask::all_valid(Shape shape) {
  Mask m;
  m.valid.assign(shape_size(shape), 1);
  m.shape = std::move(shape);
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void Tape::record(const Tensor& output, BackwardFn backward) {
  entries_.push_back({output.impl(), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                         [&](const Entry& e) { return e.output == loss.impl(); });
  if (it == entries_.rend()) throw Error("backward: loss tensor is not on this tape");

  loss.impl()->grad.assign(1, 1.0);
  for (; it != entries_.rend(); ++it) {
    if (!it->output->grad.empty()) it->backward();
  }
}

}  // namespace clinli::ad
