#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace clinli::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Empty until the first gradient is accumulated.
  std::vector<double> grad;
  bool requires_grad = false;
};

/// Dense row-major float64 value with an optional gradient accumulator.
///
/// Copies share storage; use `clone()` for an independent value.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient view; zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  /// Allocates a zeroed accumulator on first use.
  std::span<double> mutable_grad();
  void zero_grad();

  Tensor clone() const;
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

/// Boolean validity mask; `shape` must be a prefix of the masked tensor's shape
/// (or equal to it, for softmax).
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> valid;

  static Mask all_valid(Shape shape);
  bool operator()(std::size_t flat) const { return valid[flat] != 0; }
  std::size_t count() const;
};

/// Ordered record of executed primitives. Backward walks it in exact reverse.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  /// When false, primitives compute values but register nothing.
  bool recording() const noexcept { return recording_; }
  void set_recording(bool on) noexcept { recording_ = on; }

  void record(const Tensor& output, BackwardFn backward);
  /// Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad tensor.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
  bool recording_ = true;
};

}  // namespace clinli::ad
