#pragma once

// Randomized finite-difference cases for every differentiable primitive.
// Each case builds fresh inputs from `rng` and a scalar loss that mixes the
// primitive's output with fixed random weights, so every output entry
// contributes a distinct gradient.

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "clinli/autodiff/grad_check.hpp"
#include "clinli/autodiff/lstm.hpp"
#include "clinli/autodiff/ops.hpp"

namespace clinli::testing {

using namespace clinli::ad;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

// Values bounded away from zero, for kinked primitives (abs, relu).
inline Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = sign(rng) ? u(rng) : -u(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

inline Mask random_mask(std::size_t batch, std::size_t steps, std::mt19937_64& rng) {
  // Trailing padding with at least one valid step per row.
  std::uniform_int_distribution<std::size_t> len(1, steps);
  Mask m;
  m.shape = {batch, steps};
  m.valid.assign(batch * steps, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t n = len(rng);
    for (std::size_t t = 0; t < n; ++t) m.valid[b * steps + t] = 1;
  }
  return m;
}

struct PrimitiveCase {
  std::string name;
  // Registers inputs in `params` and returns the loss closure.
  std::function<std::function<Tensor(Tape&)>(ParameterStore&, std::mt19937_64&)> build;
};

inline Tensor weighted_sum(Tape& tape, const Tensor& x, const Tensor& w) { return sum(tape, mul(tape, x, w)); }

inline std::vector<PrimitiveCase> primitive_cases() {
  using Build = std::function<Tensor(Tape&)>;
  std::vector<PrimitiveCase> cases;
  auto unary_case = [&](std::string name, Tensor (*op)(Tape&, const Tensor&), bool kinked) {
    cases.push_back({name, [op, kinked](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                       Tensor a = ps.add("a", kinked ? away_from_zero({3, 4}, rng) : random_tensor({3, 4}, rng, -2, 2));
                       Tensor w = random_tensor({3, 4}, rng);
                       return [a, w, op](Tape& t) { return weighted_sum(t, op(t, a), w); };
                     }});
  };
  unary_case("abs", &ad::abs, true);
  unary_case("relu", &ad::relu, true);
  unary_case("tanh", &ad::tanh, false);
  unary_case("sigmoid", &ad::sigmoid, false);

  auto binary_case = [&](std::string name, Tensor (*op)(Tape&, const Tensor&, const Tensor&)) {
    cases.push_back({name, [op](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                       Tensor a = ps.add("a", random_tensor({2, 3, 2}, rng));
                       Tensor b = ps.add("b", random_tensor({2, 3, 2}, rng));
                       Tensor w = random_tensor({2, 3, 2}, rng);
                       return [a, b, w, op](Tape& t) { return weighted_sum(t, op(t, a, b), w); };
                     }});
  };
  binary_case("add", &ad::add);
  binary_case("sub", &ad::sub);
  binary_case("mul", &ad::mul);

  cases.push_back({"add_bias_broadcast", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 4}, rng));
                     Tensor b = ps.add("b", random_tensor({4}, rng));
                     Tensor w = random_tensor({2, 3, 4}, rng);
                     return [a, b, w](Tape& t) { return weighted_sum(t, add(t, a, b), w); };
                   }});
  cases.push_back({"scale", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({5}, rng));
                     Tensor w = random_tensor({5}, rng);
                     return [a, w](Tape& t) { return weighted_sum(t, scale(t, a, -1.7), w); };
                   }});
  cases.push_back({"matmul", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 4}, rng));
                     Tensor b = ps.add("b", random_tensor({4, 5}, rng));
                     Tensor w = random_tensor({2, 3, 5}, rng);
                     return [a, b, w](Tape& t) { return weighted_sum(t, matmul(t, a, b), w); };
                   }});
  cases.push_back({"bmm", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 4}, rng));
                     Tensor b = ps.add("b", random_tensor({2, 4, 2}, rng));
                     Tensor w = random_tensor({2, 3, 2}, rng);
                     return [a, b, w](Tape& t) { return weighted_sum(t, bmm(t, a, b), w); };
                   }});
  cases.push_back({"transpose_last", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 4}, rng));
                     Tensor w = random_tensor({2, 4, 3}, rng);
                     return [a, w](Tape& t) { return weighted_sum(t, transpose_last(t, a), w); };
                   }});
  cases.push_back({"softmax", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({3, 5}, rng, -2, 2));
                     Tensor w = random_tensor({3, 5}, rng);
                     return [a, w](Tape& t) { return weighted_sum(t, softmax(t, a), w); };
                   }});
  cases.push_back({"softmax_masked", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 4}, rng, -2, 2));
                     Tensor w = random_tensor({2, 3, 4}, rng);
                     auto mask = std::make_shared<Mask>(Mask::all_valid({2, 3, 4}));
                     std::bernoulli_distribution drop(0.3);
                     for (auto& v : mask->valid) v = drop(rng) ? 0 : 1;
                     return [a, w, mask](Tape& t) { return weighted_sum(t, softmax(t, a, mask.get()), w); };
                   }});
  cases.push_back({"concat", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 2}, rng));
                     Tensor b = ps.add("b", random_tensor({2, 1, 2}, rng));
                     Tensor w = random_tensor({2, 4, 2}, rng);
                     return [a, b, w](Tape& t) {
                       const Tensor parts[] = {a, b};
                       return weighted_sum(t, concat(t, parts, 1), w);
                     };
                   }});
  cases.push_back({"slice", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({3, 6}, rng));
                     Tensor w = random_tensor({3, 2}, rng);
                     return [a, w](Tape& t) { return weighted_sum(t, slice(t, a, 1, 3, 2), w); };
                   }});
  cases.push_back({"select_and_stack_time", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 2}, rng));
                     Tensor w = random_tensor({2, 2, 2}, rng);
                     return [a, w](Tape& t) {
                       const Tensor steps[] = {select_time(t, a, 2), select_time(t, a, 0)};
                       return weighted_sum(t, stack_time(t, steps), w);
                     };
                   }});
  cases.push_back({"gather_time", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 2}, rng));
                     Tensor w = random_tensor({2, 4, 2}, rng);
                     std::vector<std::int64_t> idx{0, 2, 2, -1, 1, 1, 0, -1};
                     return [a, w, idx](Tape& t) { return weighted_sum(t, gather_time(t, a, idx, 4), w); };
                   }});
  cases.push_back({"apply_mask", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor a = ps.add("a", random_tensor({2, 3, 2}, rng));
                     Tensor w = random_tensor({2, 3, 2}, rng);
                     Mask m = random_mask(2, 3, rng);
                     return [a, w, m](Tape& t) { return weighted_sum(t, apply_mask(t, a, m), w); };
                   }});
  auto pool_case = [&](std::string name, Tensor (*op)(Tape&, const Tensor&, const Mask&)) {
    cases.push_back({name, [op](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                       Tensor a = ps.add("a", random_tensor({3, 4, 2}, rng));
                       Tensor w = random_tensor({3, 2}, rng);
                       Mask m = random_mask(3, 4, rng);
                       return [a, w, m, op](Tape& t) { return weighted_sum(t, op(t, a, m), w); };
                     }});
  };
  pool_case("max_pool_time", &ad::max_pool_time);
  pool_case("mean_pool_time", &ad::mean_pool_time);
  pool_case("sum_pool_time", &ad::sum_pool_time);
  cases.push_back({"embedding", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor table = ps.add("table", random_tensor({5, 3}, rng));
                     Tensor w = random_tensor({2, 3, 3}, rng);
                     std::vector<std::int64_t> ids{0, 4, 4, 2, 1, 0};
                     return [table, w, ids](Tape& t) { return weighted_sum(t, embedding(t, table, ids, {2, 3}), w); };
                   }});
  cases.push_back({"softmax_cross_entropy", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     Tensor logits = ps.add("logits", random_tensor({4, 3}, rng, -2, 2));
                     std::vector<int> labels{0, 2, 1, 2};
                     return [logits, labels](Tape& t) { return softmax_cross_entropy(t, logits, labels); };
                   }});
  cases.push_back({"lstm_cell_step", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     LstmParams p = LstmParams::create(ps, "cell", 3, 2, rng);
                     Tensor x = ps.add("x", random_tensor({2, 3}, rng));
                     Tensor h = ps.add("h", random_tensor({2, 2}, rng));
                     Tensor c = ps.add("c", random_tensor({2, 2}, rng));
                     Tensor w1 = random_tensor({2, 2}, rng), w2 = random_tensor({2, 2}, rng);
                     return [p, x, h, c, w1, w2](Tape& t) {
                       LstmState s = lstm_cell_step(t, x, {h, c}, p);
                       return add(t, weighted_sum(t, s.h, w1), weighted_sum(t, s.c, w2));
                     };
                   }});
  cases.push_back({"bilstm_encode", [](ParameterStore& ps, std::mt19937_64& rng) -> Build {
                     LstmParams fw = LstmParams::create(ps, "fw", 2, 2, rng);
                     LstmParams bw = LstmParams::create(ps, "bw", 2, 2, rng);
                     Tensor x = ps.add("x", random_tensor({2, 3, 2}, rng));
                     Tensor w = random_tensor({2, 3, 4}, rng);
                     Mask m = random_mask(2, 3, rng);
                     return [fw, bw, x, w, m](Tape& t) { return weighted_sum(t, bilstm_encode(t, x, m, fw, bw), w); };
                   }});
  return cases;
}

}  // namespace clinli::testing
