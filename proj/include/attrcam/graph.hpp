/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "attrcam/tensor.hpp"

namespace attrcam {

class Graph;

/// Handle to a node recorded on a Graph. Cheap to copy; only valid while
/// the owning graph is alive.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
};

/// Everything a primitive's backward rule may look at. Parent gradient
/// slots are null for parents that do not require gradients.
struct BackwardContext {
  const Tensor& output;
  const Tensor& output_grad;
  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> input_grads;
};

/// Tape for reverse-mode differentiation.
///
/// Nodes are appended in recording order, which is also the topological
/// order. `backward` zeroes every gradient slot, seeds the chosen node and
/// then visits nodes in exact reverse recording order, so repeated calls
/// are independent and bitwise deterministic. Single-threaded.
class Graph {
 public:
  using BackwardFn = std::function<void(const BackwardContext&)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf node holding `value`.
  Var input(Tensor value, bool requires_grad = true);

  /// Appends the result of a primitive. Throws NumericError if `value`
  /// contains NaN or Inf.
  Var record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var seed, const Tensor& seed_gradient);

 private:
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad;
  };

  const Node& node(Var v) const;

  // A deque keeps references to earlier values valid while ops append nodes.
  std::deque<Node> nodes_;
};

}  // namespace attrcam
