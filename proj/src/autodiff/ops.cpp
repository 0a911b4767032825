#include "clinli/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clinli/error.hpp"

namespace clinli::ad {
namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

bool tracked(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

std::vector<double>& grad_of(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": shape " + shape_string(a) + " " + why);
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined operand");
}

template <typename Fwd, typename Deriv>
Tensor unary(Tape& tape, const Tensor& a, const char* name, Fwd fwd, Deriv deriv) {
  require_defined(name, a);
  const bool rg = tracked(tape, {&a});
  Tensor out = Tensor::zeros(a.shape(), rg);
  auto x = a.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  if (rg) {
    ImplPtr ai = a.impl(), oi = out.impl();
    tape.record(out, [ai, oi, deriv] {
      if (!ai->requires_grad) return;
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i] * deriv(ai->data[i], oi->data[i]);
    });
  }
  return out;
}

// Splits `shape` around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

bool mask_is_prefix(const Mask& mask, const Shape& shape) {
  if (mask.shape.size() > shape.size()) return false;
  return std::equal(mask.shape.begin(), mask.shape.end(), shape.begin()) &&
         mask.valid.size() == shape_size(mask.shape);
}

void check_pool(const char* op, const Tensor& x, const Mask& mask) {
  require_defined(op, x);
  if (x.rank() != 3) shape_fail(op, x.shape(), "is not [B,T,D]");
  if (mask.shape.size() != 2 || mask.shape[0] != x.dim(0) || mask.shape[1] != x.dim(1)) {
    shape_fail(op, x.shape(), mask.shape);
  }
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined("add", a);
  require_defined("add", b);
  const bool broadcast = a.shape() != b.shape();
  if (broadcast && !(b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0))) {
    shape_fail("add", a.shape(), b.shape());
  }
  const bool rg = tracked(tape, {&a, &b});
  Tensor out = Tensor::zeros(a.shape(), rg);
  auto x = a.data(), z = b.data();
  auto y = out.mutable_data();
  const std::size_t width = z.size();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + z[broadcast ? i % width : i];
  if (rg) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(out, [ai, bi, oi, broadcast, width] {
      const auto& go = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t i = 0; i < go.size(); ++i) gb[broadcast ? i % width : i] += go[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined("sub", a);
  require_defined("sub", b);
  if (a.shape() != b.shape()) shape_fail("sub", a.shape(), b.shape());
  const bool rg = tracked(tape, {&a, &b});
  Tensor out = Tensor::zeros(a.shape(), rg);
  auto x = a.data(), z = b.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - z[i];
  if (rg) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(out, [ai, bi, oi] {
      const auto& go = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined("mul", a);
  require_defined("mul", b);
  if (a.shape() != b.shape()) shape_fail("mul", a.shape(), b.shape());
  const bool rg = tracked(tape, {&a, &b});
  Tensor out = Tensor::zeros(a.shape(), rg);
  auto x = a.data(), z = b.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
  if (rg) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(out, [ai, bi, oi] {
      const auto& go = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bi->data[i];
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * ai->data[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary(
      tape, a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor abs(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return unary(
      tape, a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.rank() < 1 || b.rank() != 2 || a.shape().back() != b.dim(0)) shape_fail("matmul", a.shape(), b.shape());
  const std::size_t k_dim = b.dim(0), m_dim = b.dim(1), rows = a.size() / std::max<std::size_t>(k_dim, 1);
  Shape out_shape = a.shape();
  out_shape.back() = m_dim;
  const bool rg = tracked(tape, {&a, &b});
  Tensor out = Tensor::zeros(out_shape, rg);
  auto x = a.data(), w = b.data();
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y.data() + r * m_dim;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double xv = x[r * k_dim + k];
      const double* wk = w.data() + k * m_dim;
      for (std::size_t m = 0; m < m_dim; ++m) yr[m] += xv * wk[m];
    }
  }
  if (rg) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(out, [ai, bi, oi, rows, k_dim, m_dim] {
      const auto& go = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = go.data() + r * m_dim;
          for (std::size_t k = 0; k < k_dim; ++k) {
            const double* wk = bi->data.data() + k * m_dim;
            double acc = 0.0;
            for (std::size_t m = 0; m < m_dim; ++m) acc += gr[m] * wk[m];
            ga[r * k_dim + k] += acc;
          }
        }
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = go.data() + r * m_dim;
          for (std::size_t k = 0; k < k_dim; ++k) {
            const double xv = ai->data[r * k_dim + k];
            if (xv == 0.0) continue;
            double* gk = gb.data() + k * m_dim;
            for (std::size_t m = 0; m < m_dim; ++m) gk[m] += xv * gr[m];
          }
        }
      }
    });
  }
  return out;
}

Tensor bmm(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined("bmm", a);
  require_defined("bmm", b);
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    shape_fail("bmm", a.shape(), b.shape());
  }
  const std::size_t batch = a.dim(0), n = a.dim(1), k_dim = a.dim(2), m_dim = b.dim(2);
  const bool rg = tracked(tape, {&a, &b});
  Tensor out = Tensor::zeros({batch, n, m_dim}, rg);
  auto x = a.data(), w = b.data();
  auto y = out.mutable_data();
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      double* yr = y.data() + (s * n + i) * m_dim;
      for (std::size_t k = 0; k < k_dim; ++k) {
        const double xv = x[(s * n + i) * k_dim + k];
        const double* wk = w.data() + (s * k_dim + k) * m_dim;
        for (std::size_t m = 0; m < m_dim; ++m) yr[m] += xv * wk[m];
      }
    }
  }
  if (rg) {
    ImplPtr ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(out, [ai, bi, oi, batch, n, k_dim, m_dim] {
      const auto& go = oi->grad;
      for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
          const double* gr = go.data() + (s * n + i) * m_dim;
          for (std::size_t k = 0; k < k_dim; ++k) {
            const std::size_t ak = (s * n + i) * k_dim + k;
            const std::size_t bk = (s * k_dim + k) * m_dim;
            if (ai->requires_grad) {
              double acc = 0.0;
              for (std::size_t m = 0; m < m_dim; ++m) acc += gr[m] * bi->data[bk + m];
              grad_of(*ai)[ak] += acc;
            }
            if (bi->requires_grad) {
              auto& gb = grad_of(*bi);
              const double xv = ai->data[ak];
              for (std::size_t m = 0; m < m_dim; ++m) gb[bk + m] += xv * gr[m];
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor transpose_last(Tape& tape, const Tensor& a) {
  require_defined("transpose_last", a);
  if (a.rank() != 3) shape_fail("transpose_last", a.shape(), "is not [B,N,M]");
  const std::size_t batch = a.dim(0), n = a.dim(1), m = a.dim(2);
  const bool rg = tracked(tape, {&a});
  Tensor out = Tensor::zeros({batch, m, n}, rg);
  auto x = a.data();
  auto y = out.mutable_data();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) y[(s * m + j) * n + i] = x[(s * n + i) * m + j];
  if (rg) {
    ImplPtr ai = a.impl(), oi = out.impl();
    tape.record(out, [ai, oi, batch, n, m] {
      auto& ga = grad_of(*ai);
      for (std::size_t s = 0; s < batch; ++s)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) ga[(s * n + i) * m + j] += oi->grad[(s * m + j) * n + i];
    });
  }
  return out;
}

Tensor softmax(Tape& tape, const Tensor& x, const Mask* mask) {
  require_defined("softmax", x);
  if (x.rank() < 1) shape_fail("softmax", x.shape(), "has no last axis");
  if (mask && (mask->shape != x.shape() || mask->valid.size() != x.size())) {
    shape_fail("softmax", x.shape(), mask->shape);
  }
  const std::size_t width = x.shape().back();
  const std::size_t rows = width ? x.size() / width : 0;
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros(x.shape(), rg);
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * width;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j)
      if (!mask || (*mask)(base + j)) top = std::max(top, in[base + j]);
    if (top == -std::numeric_limits<double>::infinity()) continue;
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (mask && !(*mask)(base + j)) continue;
      y[base + j] = std::exp(in[base + j] - top);
      total += y[base + j];
    }
    for (std::size_t j = 0; j < width; ++j) y[base + j] /= total;
  }
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, rows, width] {
      auto& gx = grad_of(*xi);
      const auto& go = oi->grad;
      const auto& p = oi->data;
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * width;
        double dot = 0.0;
        for (std::size_t j = 0; j < width; ++j) dot += go[base + j] * p[base + j];
        for (std::size_t j = 0; j < width; ++j) gx[base + j] += p[base + j] * (go[base + j] - dot);
      }
    });
  }
  return out;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  for (const auto& p : parts) require_defined("concat", p);
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) shape_fail("concat", first, "has no axis " + std::to_string(axis));
  Shape out_shape = first;
  out_shape[axis] = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != first.size()) shape_fail("concat", first, p.shape());
    for (std::size_t i = 0; i < first.size(); ++i)
      if (i != axis && p.dim(i) != first[i]) shape_fail("concat", first, p.shape());
    out_shape[axis] += p.dim(axis);
    rg = rg || p.requires_grad();
  }
  rg = rg && tape.recording();
  Tensor out = Tensor::zeros(out_shape, rg);
  const AxisSplit os = split_axis(out_shape, axis);
  auto y = out.mutable_data();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.dim(axis) * os.inner;
    auto x = p.data();
    for (std::size_t o = 0; o < os.outer; ++o)
      std::copy_n(x.begin() + o * chunk, chunk, y.begin() + o * os.extent * os.inner + offset);
    offset += chunk;
  }
  if (rg) {
    std::vector<ImplPtr> ins;
    for (const auto& p : parts) ins.push_back(p.impl());
    ImplPtr oi = out.impl();
    tape.record(out, [ins, oi, offsets, os, axis] {
      for (std::size_t k = 0; k < ins.size(); ++k) {
        if (!ins[k]->requires_grad) continue;
        auto& g = grad_of(*ins[k]);
        const std::size_t chunk = ins[k]->shape[axis] * os.inner;
        for (std::size_t o = 0; o < os.outer; ++o) {
          const double* src = oi->grad.data() + o * os.extent * os.inner + offsets[k];
          double* dst = g.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  require_defined("slice", x);
  if (axis >= x.rank() || start + length > x.dim(axis)) {
    shape_fail("slice", x.shape(),
               "cannot be sliced at axis " + std::to_string(axis) + " [" + std::to_string(start) + ", " +
                   std::to_string(start + length) + ")");
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  const AxisSplit is = split_axis(x.shape(), axis);
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros(out_shape, rg);
  const std::size_t chunk = length * is.inner;
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t o = 0; o < is.outer; ++o)
    std::copy_n(in.begin() + o * is.extent * is.inner + start * is.inner, chunk, y.begin() + o * chunk);
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, is, start, chunk] {
      auto& gx = grad_of(*xi);
      for (std::size_t o = 0; o < is.outer; ++o) {
        double* dst = gx.data() + o * is.extent * is.inner + start * is.inner;
        const double* src = oi->grad.data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

Tensor select_time(Tape& tape, const Tensor& x, std::size_t t) {
  require_defined("select_time", x);
  if (x.rank() != 3 || t >= x.dim(1)) shape_fail("select_time", x.shape(), "has no timestep " + std::to_string(t));
  const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros({batch, width}, rg);
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(in.begin() + (b * steps + t) * width, width, y.begin() + b * width);
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, batch, steps, width, t] {
      auto& gx = grad_of(*xi);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t d = 0; d < width; ++d) gx[(b * steps + t) * width + d] += oi->grad[b * width + d];
    });
  }
  return out;
}

Tensor stack_time(Tape& tape, std::span<const Tensor> steps) {
  if (steps.empty()) throw ShapeError("stack_time: no timesteps");
  const Shape& first = steps.front().shape();
  bool rg = false;
  for (const auto& s : steps) {
    require_defined("stack_time", s);
    if (s.shape() != first || first.size() != 2) shape_fail("stack_time", first, s.shape());
    rg = rg || s.requires_grad();
  }
  rg = rg && tape.recording();
  const std::size_t batch = first[0], width = first[1], count = steps.size();
  Tensor out = Tensor::zeros({batch, count, width}, rg);
  auto y = out.mutable_data();
  for (std::size_t t = 0; t < count; ++t) {
    auto x = steps[t].data();
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(x.begin() + b * width, width, y.begin() + (b * count + t) * width);
  }
  if (rg) {
    std::vector<ImplPtr> ins;
    for (const auto& s : steps) ins.push_back(s.impl());
    ImplPtr oi = out.impl();
    tape.record(out, [ins, oi, batch, width, count] {
      for (std::size_t t = 0; t < count; ++t) {
        if (!ins[t]->requires_grad) continue;
        auto& g = grad_of(*ins[t]);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t d = 0; d < width; ++d) g[b * width + d] += oi->grad[(b * count + t) * width + d];
      }
    });
  }
  return out;
}

Tensor gather_time(Tape& tape, const Tensor& x, std::span<const std::int64_t> index, std::size_t out_steps) {
  require_defined("gather_time", x);
  if (x.rank() != 3 || index.size() != x.dim(0) * out_steps) {
    shape_fail("gather_time", x.shape(), "does not match an index of " + std::to_string(index.size()));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
  for (auto i : index)
    if (i < -1 || i >= static_cast<std::int64_t>(steps)) shape_fail("gather_time", x.shape(), "index out of range");
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros({batch, out_steps, width}, rg);
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_steps; ++t) {
      const auto src = index[b * out_steps + t];
      if (src < 0) continue;
      std::copy_n(in.begin() + (b * steps + static_cast<std::size_t>(src)) * width, width,
                  y.begin() + (b * out_steps + t) * width);
    }
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    std::vector<std::int64_t> idx(index.begin(), index.end());
    tape.record(out, [xi, oi, idx, batch, steps, width, out_steps] {
      auto& gx = grad_of(*xi);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < out_steps; ++t) {
          const auto src = idx[b * out_steps + t];
          if (src < 0) continue;
          for (std::size_t d = 0; d < width; ++d)
            gx[(b * steps + static_cast<std::size_t>(src)) * width + d] += oi->grad[(b * out_steps + t) * width + d];
        }
    });
  }
  return out;
}

Tensor apply_mask(Tape& tape, const Tensor& x, const Mask& mask) {
  require_defined("apply_mask", x);
  if (!mask_is_prefix(mask, x.shape())) shape_fail("apply_mask", x.shape(), mask.shape);
  const std::size_t inner = mask.valid.empty() ? 0 : x.size() / mask.valid.size();
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros(x.shape(), rg);
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t m = 0; m < mask.valid.size(); ++m)
    if (mask.valid[m]) std::copy_n(in.begin() + m * inner, inner, y.begin() + m * inner);
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, valid = mask.valid, inner] {
      auto& gx = grad_of(*xi);
      for (std::size_t m = 0; m < valid.size(); ++m) {
        if (!valid[m]) continue;
        for (std::size_t i = 0; i < inner; ++i) gx[m * inner + i] += oi->grad[m * inner + i];
      }
    });
  }
  return out;
}

Tensor max_pool_time(Tape& tape, const Tensor& x, const Mask& mask) {
  check_pool("max_pool_time", x, mask);
  const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros({batch, width}, rg);
  // Source flat index per output entry; -1 when the row is fully masked.
  std::vector<std::int64_t> arg(batch * width, -1);
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t) {
      if (!mask(b * steps + t)) continue;
      for (std::size_t d = 0; d < width; ++d) {
        const std::size_t src = (b * steps + t) * width + d;
        auto& best = arg[b * width + d];
        if (best < 0 || in[src] > in[static_cast<std::size_t>(best)]) best = static_cast<std::int64_t>(src);
      }
    }
  for (std::size_t i = 0; i < arg.size(); ++i) y[i] = arg[i] < 0 ? 0.0 : in[static_cast<std::size_t>(arg[i])];
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, arg] {
      auto& gx = grad_of(*xi);
      for (std::size_t i = 0; i < arg.size(); ++i)
        if (arg[i] >= 0) gx[static_cast<std::size_t>(arg[i])] += oi->grad[i];
    });
  }
  return out;
}

namespace {

Tensor weighted_pool(Tape& tape, const Tensor& x, const Mask& mask, bool mean) {
  const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::zeros({batch, width}, rg);
  std::vector<double> weight(batch, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t n = 0;
    for (std::size_t t = 0; t < steps; ++t) n += mask(b * steps + t) ? 1 : 0;
    weight[b] = mean ? (n ? 1.0 / static_cast<double>(n) : 0.0) : 1.0;
  }
  auto in = x.data();
  auto y = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      if (!mask(b * steps + t)) continue;
      for (std::size_t d = 0; d < width; ++d) y[b * width + d] += in[(b * steps + t) * width + d];
    }
    if (mean)
      for (std::size_t d = 0; d < width; ++d) y[b * width + d] *= weight[b];
  }
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi, valid = mask.valid, weight, batch, steps, width] {
      auto& gx = grad_of(*xi);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < steps; ++t) {
          if (!valid[b * steps + t]) continue;
          for (std::size_t d = 0; d < width; ++d)
            gx[(b * steps + t) * width + d] += weight[b] * oi->grad[b * width + d];
        }
    });
  }
  return out;
}

}  // namespace

Tensor mean_pool_time(Tape& tape, const Tensor& x, const Mask& mask) {
  check_pool("mean_pool_time", x, mask);
  return weighted_pool(tape, x, mask, true);
}

Tensor sum_pool_time(Tape& tape, const Tensor& x, const Mask& mask) {
  check_pool("sum_pool_time", x, mask);
  return weighted_pool(tape, x, mask, false);
}

Tensor embedding(Tape& tape, const Tensor& table, std::span<const std::int64_t> ids, const Shape& id_shape) {
  require_defined("embedding", table);
  if (table.rank() != 2 || shape_size(id_shape) != ids.size()) {
    shape_fail("embedding", table.shape(), id_shape);
  }
  const std::size_t rows = table.dim(0), width = table.dim(1);
  for (auto id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= rows)
      shape_fail("embedding", table.shape(), "has no row " + std::to_string(id));
  Shape out_shape = id_shape;
  out_shape.push_back(width);
  const bool rg = tracked(tape, {&table});
  Tensor out = Tensor::zeros(out_shape, rg);
  auto w = table.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(w.begin() + static_cast<std::size_t>(ids[i]) * width, width, y.begin() + i * width);
  if (rg) {
    ImplPtr ti = table.impl(), oi = out.impl();
    std::vector<std::int64_t> idx(ids.begin(), ids.end());
    tape.record(out, [ti, oi, idx, width] {
      auto& gt = grad_of(*ti);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t d = 0; d < width; ++d)
          gt[static_cast<std::size_t>(idx[i]) * width + d] += oi->grad[i * width + d];
    });
  }
  return out;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> labels) {
  require_defined("softmax_cross_entropy", logits);
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || logits.dim(0) == 0) {
    shape_fail("softmax_cross_entropy", logits.shape(), "does not match " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= classes)
      shape_fail("softmax_cross_entropy", logits.shape(), "has no class " + std::to_string(l));
  std::vector<double> probs(batch * classes);
  double loss = 0.0;
  auto z = logits.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = z.data() + b * classes;
    const double top = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - top);
    const double log_total = std::log(total) + top;
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] = std::exp(row[c] - log_total);
    loss += log_total - row[static_cast<std::size_t>(labels[b])];
  }
  const bool rg = tracked(tape, {&logits});
  Tensor out = Tensor::from({}, {loss / static_cast<double>(batch)}, rg);
  if (rg) {
    ImplPtr li = logits.impl(), oi = out.impl();
    std::vector<int> y(labels.begin(), labels.end());
    tape.record(out, [li, oi, probs = std::move(probs), y, batch, classes] {
      auto& gl = grad_of(*li);
      const double g = oi->grad[0] / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < classes; ++c) {
          const double target = static_cast<std::size_t>(y[b]) == c ? 1.0 : 0.0;
          gl[b * classes + c] += g * (probs[b * classes + c] - target);
        }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  require_defined("sum", x);
  double total = 0.0;
  for (double v : x.data()) total += v;
  const bool rg = tracked(tape, {&x});
  Tensor out = Tensor::from({}, {total}, rg);
  if (rg) {
    ImplPtr xi = x.impl(), oi = out.impl();
    tape.record(out, [xi, oi] {
      auto& gx = grad_of(*xi);
      for (auto& g : gx) g += oi->grad[0];
    });
  }
  return out;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, std::mt19937_64& rng) {
  require_defined("dropout", x);
  if (rate < 0.0 || rate >= 1.0) throw ShapeError("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> m(x.size());
  for (auto& v : m) v = keep(rng) ? factor : 0.0;
  return mul(tape, x, Tensor::from(x.shape(), std::move(m)));
}

}  // namespace clinli::ad
