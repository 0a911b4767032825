#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "clinli/autodiff/tensor.hpp"

// Differentiable primitives. Every function computes its output eagerly and,
// when the tape is recording and any input requires a gradient, registers a
// backward closure on `tape`. Shape violations raise clinli::ShapeError naming
// the primitive and the offending shapes.
namespace clinli::ad {

// Elementwise. `add` also accepts a rank-1 `b` matching the last axis of `a`
// (bias broadcast).
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor abs(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);

/// [..., K] x [K, M] -> [..., M]; leading axes are treated as rows.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// [B, N, K] x [B, K, M] -> [B, N, M].
Tensor bmm(Tape& tape, const Tensor& a, const Tensor& b);
/// [B, N, M] -> [B, M, N].
Tensor transpose_last(Tape& tape, const Tensor& a);

/// Softmax over the last axis with max subtraction. Positions where `mask` is
/// false get probability 0; rows with no valid position are all zero.
Tensor softmax(Tape& tape, const Tensor& x, const Mask* mask = nullptr);

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);
Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

/// [B, T, D] -> [B, D] at timestep t.
Tensor select_time(Tape& tape, const Tensor& x, std::size_t t);
/// T tensors of [B, D] -> [B, T, D].
Tensor stack_time(Tape& tape, std::span<const Tensor> steps);
/// [B, T, D] -> [B, T', D] where out[b, t'] = x[b, index[b*T' + t']], or zero for
/// index -1. `index` has B*T' entries.
Tensor gather_time(Tape& tape, const Tensor& x, std::span<const std::int64_t> index, std::size_t out_steps);

/// Zeroes the entries whose mask prefix position is invalid.
Tensor apply_mask(Tape& tape, const Tensor& x, const Mask& mask);

// Pooling over axis 1 of [B, T, D] with a [B, T] mask; all-masked rows pool to 0.
Tensor max_pool_time(Tape& tape, const Tensor& x, const Mask& mask);
Tensor mean_pool_time(Tape& tape, const Tensor& x, const Mask& mask);
Tensor sum_pool_time(Tape& tape, const Tensor& x, const Mask& mask);

/// Row lookup in a [V, D] table; `ids` shaped `id_shape` -> id_shape + [D].
Tensor embedding(Tape& tape, const Tensor& table, std::span<const std::int64_t> ids, const Shape& id_shape);

/// Mean softmax cross-entropy of [B, C] logits against class indices.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> labels);

Tensor sum(Tape& tape, const Tensor& x);

/// Inverted dropout with a mask drawn from `rng`; identity when rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, std::mt19937_64& rng);

}  // namespace clinli::ad
