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

#include "attrcam/graph.hpp"

#include <algorithm>

#include "attrcam/errors.hpp"

namespace attrcam {

const Tensor& Var::value() const {
  if (!graph) throw UsageError("value() on an unbound Var");
  return graph->value(*this);
}

const Tensor& Var::grad() const {
  if (!graph) throw UsageError("grad() on an unbound Var");
  return graph->grad(*this);
}

Var Graph::input(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite value fed into graph input");
  Tensor grad(value.shape());
  nodes_.push_back(Node{"input", std::move(value), std::move(grad), {}, nullptr, requires_grad});
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite output in ") + op);
  Node n{op, std::move(value), Tensor{}, {}, std::move(backward), false};
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.graph != this || p.id >= nodes_.size()) {
      throw UsageError(std::string(op) + ": parent node belongs to another graph");
    }
    n.parents.push_back(p.id);
    n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  n.grad = Tensor(n.value.shape());
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph != this || v.id >= nodes_.size()) {
    throw UsageError("node was not recorded on this graph");
  }
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
const Tensor& Graph::grad(Var v) const { return node(v).grad; }
bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

void Graph::backward(Var seed, const Tensor& seed_gradient) {
  const Node& s = node(seed);
  if (seed_gradient.shape() != s.value.shape()) {
    throw DimensionError("seed gradient shape " + shape_string(seed_gradient.shape()) +
                         " != output shape " + shape_string(s.value.shape()));
  }
  for (auto& n : nodes_) std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
  nodes_[seed.id].grad = seed_gradient;

  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> input_grads;
  for (std::size_t i = seed.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || !n.requires_grad) continue;
    inputs.clear();
    input_grads.clear();
    for (auto p : n.parents) {
      inputs.push_back(&nodes_[p].value);
      input_grads.push_back(nodes_[p].requires_grad ? &nodes_[p].grad : nullptr);
    }
    n.backward(BackwardContext{n.value, n.grad, inputs, input_grads});
  }
  for (std::size_t i = 0; i <= seed.id; ++i) {
    if (!nodes_[i].grad.all_finite()) {
      throw NumericError(std::string("non-finite gradient at ") + nodes_[i].op);
    }
  }
}

}  // namespace attrcam
