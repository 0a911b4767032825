#include "clinli/autodiff/lstm.hpp"

#include <cmath>

#include "clinli/error.hpp"

namespace clinli::ad {

LstmParams LstmParams::create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                              std::size_t hidden_dim, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden_dim == 0) throw ShapeError("lstm: dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  auto draw = [&](Shape shape) {
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = u(rng);
    return Tensor::from(std::move(shape), std::move(v));
  };
  LstmParams p;
  p.w_input = store.add(prefix + ".w_input", draw({input_dim, 4 * hidden_dim}));
  p.w_hidden = store.add(prefix + ".w_hidden", draw({hidden_dim, 4 * hidden_dim}));
  Tensor bias = draw({4 * hidden_dim});
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) bias.mutable_data()[i] = 1.0;
  p.bias = store.add(prefix + ".bias", bias);
  return p;
}

LstmParams LstmParams::bind(ParameterStore& store, const std::string& prefix) {
  return {store.at(prefix + ".w_input"), store.at(prefix + ".w_hidden"), store.at(prefix + ".bias")};
}

namespace {

LstmState gates_to_state(Tape& tape, const Tensor& z, const Tensor& c_prev, std::size_t hidden) {
  Tensor i = sigmoid(tape, slice(tape, z, 1, 0, hidden));
  Tensor f = sigmoid(tape, slice(tape, z, 1, hidden, hidden));
  Tensor g = tanh(tape, slice(tape, z, 1, 2 * hidden, hidden));
  Tensor o = sigmoid(tape, slice(tape, z, 1, 3 * hidden, hidden));
  Tensor c = add(tape, mul(tape, f, c_prev), mul(tape, i, g));
  Tensor h = mul(tape, o, tanh(tape, c));
  return {h, c};
}

void check_state(const char* op, const Tensor& x, const LstmState& prev, const LstmParams& params) {
  const std::size_t hidden = params.hidden_dim();
  if (x.rank() != 2 || x.dim(1) != params.input_dim()) {
    throw ShapeError(std::string(op) + ": input " + shape_string(x.shape()) + " does not match input dim " +
                     std::to_string(params.input_dim()));
  }
  const Shape expected{x.dim(0), hidden};
  if (prev.h.shape() != expected || prev.c.shape() != expected) {
    throw ShapeError(std::string(op) + ": state shapes " + shape_string(prev.h.shape()) + "/" +
                     shape_string(prev.c.shape()) + " do not match " + shape_string(expected));
  }
}

}  // namespace

LstmState lstm_cell_step(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& params) {
  check_state("lstm_cell_step", x, prev, params);
  Tensor z = add(tape, add(tape, matmul(tape, x, params.w_input), matmul(tape, prev.h, params.w_hidden)), params.bias);
  return gates_to_state(tape, z, prev.c, params.hidden_dim());
}

Tensor lstm_encode(Tape& tape, const Tensor& x, const Mask& mask, const LstmParams& params, bool reverse) {
  if (x.rank() != 3 || x.dim(2) != params.input_dim()) {
    throw ShapeError("lstm_encode: input " + shape_string(x.shape()) + " does not match input dim " +
                     std::to_string(params.input_dim()));
  }
  if (x.dim(1) == 0) throw ShapeError("lstm_encode: empty sequence");
  if (mask.shape != Shape{x.dim(0), x.dim(1)}) {
    throw ShapeError("lstm_encode: mask " + shape_string(mask.shape) + " does not match " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), hidden = params.hidden_dim();
  const Tensor projected = add(tape, matmul(tape, x, params.w_input), params.bias);
  LstmState state{Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
  std::vector<Tensor> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    Mask step;
    step.shape = {batch};
    step.valid.resize(batch);
    for (std::size_t b = 0; b < batch; ++b) step.valid[b] = mask.valid[b * steps + t];
    Tensor z = add(tape, select_time(tape, projected, t), matmul(tape, state.h, params.w_hidden));
    LstmState next = gates_to_state(tape, z, state.c, hidden);
    state.h = apply_mask(tape, next.h, step);
    state.c = apply_mask(tape, next.c, step);
    outputs[t] = state.h;
  }
  return stack_time(tape, outputs);
}

Tensor bilstm_encode(Tape& tape, const Tensor& x, const Mask& mask, const LstmParams& forward,
                     const LstmParams& backward) {
  const Tensor parts[] = {lstm_encode(tape, x, mask, forward, false), lstm_encode(tape, x, mask, backward, true)};
  return concat(tape, parts, 2);
}

}  // namespace clinli::ad
