#pragma once

#include <random>
#include <string>

#include "clinli/autodiff/ops.hpp"
#include "clinli/autodiff/parameters.hpp"

namespace clinli::ad {

/// Weights of one LSTM direction. Gate blocks along the 4H axis are ordered
/// input, forget, candidate, output.
struct LstmParams {
  Tensor w_input;   // [D, 4H]
  Tensor w_hidden;  // [H, 4H]
  Tensor bias;      // [4H]

  std::size_t input_dim() const { return w_input.dim(0); }
  std::size_t hidden_dim() const { return w_hidden.dim(0); }

  /// Registers `<prefix>.w_input`, `<prefix>.w_hidden`, `<prefix>.bias` with
  /// weights uniform in [-1/sqrt(H), 1/sqrt(H)] and forget-gate bias 1.
  static LstmParams create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                           std::size_t hidden_dim, std::mt19937_64& rng);
  static LstmParams bind(ParameterStore& store, const std::string& prefix);
};

struct LstmState {
  Tensor h;  // [B, H]
  Tensor c;  // [B, H]
};

/// One step: c = f*c_prev + i*g, h = o*tanh(c) for x of shape [B, D].
LstmState lstm_cell_step(Tape& tape, const Tensor& x, const LstmState& prev, const LstmParams& params);

/// Runs one direction over [B, T, D]. Timesteps invalid under `mask` ([B, T])
/// produce zero state, so each sequence starts fresh at its first valid step.
Tensor lstm_encode(Tape& tape, const Tensor& x, const Mask& mask, const LstmParams& params, bool reverse);

/// [B, T, D] -> [B, T, 2H]: forward state at t followed by backward state at t.
Tensor bilstm_encode(Tape& tape, const Tensor& x, const Mask& mask, const LstmParams& forward,
                     const LstmParams& backward);

}  // namespace clinli::ad
