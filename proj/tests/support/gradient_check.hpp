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

// Finite-difference checks shared by the unit suite and the acceptance
// binary. Every case compares the tape gradient of <r, op(inputs)> for a
// random projection r with central differences over every input coordinate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "attrcam/balancing.hpp"
#include "attrcam/graph.hpp"
#include "attrcam/network.hpp"
#include "attrcam/ops.hpp"
#include "test_support.hpp"

namespace attrcam::testing {

using OpFn = std::function<Var(const std::vector<Var>&)>;

struct GradCase {
  std::vector<Tensor> inputs;
  OpFn op;
};

/// Largest norm-wise relative error over the inputs of one case.
inline double gradient_error(const GradCase& c, Rng& rng, double h = 1e-5) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : c.inputs) vars.push_back(g.input(t));
  const Var out = c.op(vars);
  const Tensor r = random_tensor(rng, out.value().shape());
  g.backward(out, r);

  double worst = 0.0;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    auto f = [&](const Tensor& probe) {
      Graph g2;
      std::vector<Var> v2;
      for (std::size_t j = 0; j < c.inputs.size(); ++j) v2.push_back(g2.input(j == i ? probe : c.inputs[j], false));
      return project(c.op(v2).value(), r);
    };
    worst = std::max(worst, relative_error(vars[i].grad(), numeric_gradient(f, c.inputs[i], h)));
  }
  return worst;
}

/// One random case per call for every primitive, keyed by primitive name.
inline std::map<std::string, std::function<GradCase(Rng&)>> primitive_generators() {
  std::map<std::string, std::function<GradCase(Rng&)>> gens;

  gens["conv2d"] = [](Rng& rng) {
    const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), k = 1 + rng.below(3);
    int kernel = 0, pad = 0, stride = 0, side = 0;
    while (side < 1) {
      kernel = 1 + static_cast<int>(rng.below(3));
      pad = static_cast<int>(rng.below(2));
      stride = 1 + static_cast<int>(rng.below(2));
      const int out = 1 + static_cast<int>(rng.below(4));
      side = (out - 1) * stride + kernel - 2 * pad;
    }
    const auto ks = static_cast<std::size_t>(kernel), ss = static_cast<std::size_t>(side);
    return GradCase{{random_tensor(rng, {n, c, ss, ss}), random_tensor(rng, {k, c, ks, ks}), random_tensor(rng, {k})},
                    [stride, pad](const std::vector<Var>& v) { return ops::conv2d(v[0], v[1], v[2], stride, pad); }};
  };
  gens["relu"] = [](Rng& rng) {
    return GradCase{{away_from_zero(rng, {2, 3, 4})}, [](const std::vector<Var>& v) { return ops::relu(v[0]); }};
  };
  gens["avg_pool2d"] = [](Rng& rng) {
    const std::size_t k = 1 + rng.below(3), o = 1 + rng.below(3);
    return GradCase{{random_tensor(rng, {1 + rng.below(2), 1 + rng.below(3), k * o, k * o})},
                    [k](const std::vector<Var>& v) { return ops::avg_pool2d(v[0], static_cast<int>(k)); }};
  };
  gens["global_avg_pool"] = [](Rng& rng) {
    const std::size_t side = 1 + rng.below(4);
    return GradCase{{random_tensor(rng, {1 + rng.below(2), 1 + rng.below(3), side, side})},
                    [](const std::vector<Var>& v) { return ops::global_avg_pool(v[0]); }};
  };
  gens["dense"] = [](Rng& rng) {
    const std::size_t n = 1 + rng.below(3), d = 1 + rng.below(5), o = 1 + rng.below(4);
    return GradCase{{random_tensor(rng, {n, d}), random_tensor(rng, {o, d}), random_tensor(rng, {o})},
                    [](const std::vector<Var>& v) { return ops::dense(v[0], v[1], v[2]); }};
  };
  gens["logistic"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {3, 4}, -6.0, 6.0)},
                    [](const std::vector<Var>& v) { return ops::logistic(v[0]); }};
  };
  gens["add"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {2, 5}), random_tensor(rng, {2, 5})},
                    [](const std::vector<Var>& v) { return ops::add(v[0], v[1]); }};
  };
  gens["mul"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {2, 5}), random_tensor(rng, {2, 5})},
                    [](const std::vector<Var>& v) { return ops::mul(v[0], v[1]); }};
  };
  gens["scale"] = [](Rng& rng) {
    const double f = rng.uniform(-3.0, 3.0);
    return GradCase{{random_tensor(rng, {4, 3})}, [f](const std::vector<Var>& v) { return ops::scale(v[0], f); }};
  };
  gens["square"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {4, 3})}, [](const std::vector<Var>& v) { return ops::square(v[0]); }};
  };
  gens["sum"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {2, 3, 2})}, [](const std::vector<Var>& v) { return ops::sum(v[0]); }};
  };
  gens["reshape"] = [](Rng& rng) {
    return GradCase{{random_tensor(rng, {2, 6})},
                    [](const std::vector<Var>& v) { return ops::reshape(v[0], Shape{3, 2, 2}); }};
  };
  gens["weighted_euclidean_loss"] = [](Rng& rng) {
    const std::size_t n = 1 + rng.below(5), m = 1 + rng.below(3);
    std::vector<int> t(n * m);
    for (auto& v : t) v = rng.uniform() < 0.5 ? 1 : -1;
    BalanceWeights w;
    for (std::size_t a = 0; a < m; ++a) {
      w.positive.push_back(rng.uniform(0.1, 10.0));
      w.negative.push_back(rng.uniform(0.1, 10.0));
    }
    const LabelMatrix labels(n, m, t);
    return GradCase{{random_tensor(rng, {n, m}, -2.0, 2.0)},
                    [labels, w](const std::vector<Var>& v) { return weighted_euclidean_loss(v[0], labels, w); }};
  };
  return gens;
}

/// Smallest |pre-activation| over every conv layer of `model` on `images`.
inline double relu_margin(const AttributeModel& model, const Tensor& images) {
  const Architecture& a = model.architecture();
  Graph g;
  Var x = g.input(images, false);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.channels.size(); ++i) {
    const auto& b = model.blocks()[i];
    x = ops::conv2d(x, g.input(b.kernel, false), g.input(b.bias, false), 1, static_cast<int>(a.kernel / 2));
    for (double v : x.value().values()) margin = std::min(margin, std::abs(v));
    x = ops::relu(x);
    if (a.pool > 1) x = ops::avg_pool2d(x, static_cast<int>(a.pool));
  }
  return margin;
}

struct ComposedCase {
  AttributeModel model;
  Tensor images;
  LabelMatrix labels;
  BalanceWeights weights;
  std::size_t resamples = 0;
};

/// Random two-block model on 8x8 images whose pre-activations all stay at
/// least `margin` away from the ReLU kink (resampled until they do).
inline ComposedCase composed_case(Rng& rng, double margin = 1e-3) {
  Architecture arch;
  arch.in_channels = 1 + rng.below(2);
  arch.image_size = 8;
  arch.channels = {1 + rng.below(3), 1 + rng.below(3)};
  const std::size_t m = 1 + rng.below(3), n = 2;
  ComposedCase c{random_model(rng, arch, m), random_tensor(rng, {n, arch.in_channels, 8, 8}, 0.0, 1.0), {}, {}};
  while (relu_margin(c.model, c.images) < margin) {
    c.model = random_model(rng, arch, m);
    c.images = random_tensor(rng, {n, arch.in_channels, 8, 8}, 0.0, 1.0);
    ++c.resamples;
  }
  std::vector<int> t(n * m);
  for (auto& v : t) v = rng.uniform() < 0.5 ? 1 : -1;
  c.labels = LabelMatrix(n, m, t);
  for (std::size_t a = 0; a < m; ++a) {
    c.weights.positive.push_back(rng.uniform(0.5, 5.0));
    c.weights.negative.push_back(rng.uniform(0.5, 5.0));
  }
  return c;
}

/// Relative error of the loss gradient with respect to every parameter
/// tensor and the images.
inline double composed_gradient_error(const ComposedCase& c, double h = 1e-5) {
  auto loss_of = [&](const AttributeModel& model, const Tensor& images, Graph& g, BoundParameters& bound, Var& img) {
    bound = bind_parameters(g, model, true);
    img = g.input(images, true);
    return weighted_euclidean_loss(forward_nodes(model, bound, img).logits, c.labels, c.weights);
  };
  Graph g;
  BoundParameters bound;
  Var img;
  const Var loss = loss_of(c.model, c.images, g, bound, img);
  g.backward(loss, Tensor::scalar(1.0));

  auto eval = [&](const AttributeModel& model, const Tensor& images) {
    Graph g2;
    BoundParameters b2;
    Var i2;
    return loss_of(model, images, g2, b2, i2).value()[0];
  };

  double worst = 0.0;
  const std::size_t n_params = c.model.parameters().size();
  for (std::size_t k = 0; k < n_params; ++k) {
    auto f = [&](const Tensor& probe) {
      AttributeModel m = c.model;
      *m.parameters()[k] = probe;
      return eval(m, c.images);
    };
    worst = std::max(worst, relative_error(bound.vars[k].grad(), numeric_gradient(f, *c.model.parameters()[k], h)));
  }
  auto fi = [&](const Tensor& probe) { return eval(c.model, probe); };
  worst = std::max(worst, relative_error(img.grad(), numeric_gradient(fi, c.images, h)));
  return worst;
}

}  // namespace attrcam::testing
