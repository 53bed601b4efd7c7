/*
 * Copyright 2026 The mtuplift Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTUPLIFT_NN_TAPE_HPP_
#define MTUPLIFT_NN_TAPE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nn/tensor.hpp"

namespace mtu::nn {

enum class Activation { kLinear, kRelu, kSigmoid };

// Floor applied to the reference distribution of a KL term.
inline constexpr double kKlFloor = 1e-8;

// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// Gradients produced by one backward pass, keyed by parameter identity.
class Gradients {
 public:
  void add(const Param& p, const Matrix& g);
  const Matrix* find(const Param& p) const;
  std::size_t size() const { return entries_.size(); }

  // Adds every gradient into the matching parameter of `store`. Entries for
  // parameters not owned by `store` are ignored.
  void accumulate_into(ParamStore& store) const;

 private:
  std::vector<std::pair<const Param*, Matrix>> entries_;
  std::unordered_map<const Param*, std::size_t> index_;
};

// Records a forward computation over batch matrices (one row per sample) and
// replays it in reverse to produce parameter gradients. Parameters are read
// through const references, so a frozen model may be evaluated on many
// tapes concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  // x * W^T + b, W is (out x in), b is (1 x out).
  Var dense(Var x, const Param& weights, const Param& bias);
  Var dense_forward(Var x, const Param& weights, const Param& bias, Activation act);
  Var activate(Var x, Activation act);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var softmax_rows(Var x);

  // One row per id, copied out of `table`. `label` names the feature in
  // index errors.
  Var embedding(const Param& table, std::span<const std::int32_t> ids,
                std::string_view label);

  // Row b is the mean of the table rows listed in lists[b]. Throws DataError
  // for an empty list.
  Var mean_pool(const Param& table, const std::vector<std::vector<std::int32_t>>& lists,
                std::string_view label);

  // sum_j weights(:, j) .* items[j]; weights is (B x F), each item (B x d).
  Var weighted_sum(Var weights, std::span<const Var> items);
  Var concat_cols(Var left, Var right);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);
  Var stop_gradient(Var a);

  // Scalar reductions.
  Var sum_squared_error(Var pred, const Matrix& target);
  Var mean_squared_error(Var pred, const Matrix& target);
  // sum over rows of KL(p_i || q_i), q floored at `floor` and renormalized.
  Var kl_rows(Var p, Var q, double floor = kKlFloor);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a 1x1 node. Throws StateError when nothing was recorded
  // or the handle does not belong to this tape.
  Gradients backward(Var loss);

 private:
  using Backprop = std::function<void(const Matrix& upstream)>;

  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backprop backprop;
  };

  Var push(Matrix value, bool needs_grad, Backprop backprop);
  const Node& node(Var v) const;
  bool needs_grad(Var v) const { return node(v).needs_grad; }
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
  Gradients* sink_ = nullptr;
};

// Plain-vector kernels shared with the tape.
Vector softmax(std::span<const double> logits);
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double floor = kKlFloor);
double mse(std::span<const double> pred, std::span<const double> label);

}  // namespace mtu::nn

#endif  // MTUPLIFT_NN_TAPE_HPP_
