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

#include "attrcam/graph.hpp"
#include "attrcam/tensor.hpp"

/// Differentiable primitives. Each records one node on the graph of its
/// first argument.
namespace attrcam::ops {

/// Cross-correlation of input[N,C,H,W] with kernel[K,C,kh,kw] plus bias[K].
/// Output spatial size is (H + 2*padding - kh) / stride + 1, which must be
/// an exact division.
Var conv2d(Var input, Var kernel, Var bias, int stride = 1, int padding = 0);

Var relu(Var x);

/// Mean over non-overlapping k x k blocks of input[N,C,H,W].
Var avg_pool2d(Var x, int k);

/// [N,C,H,W] -> [N,C], the spatial mean of every channel.
Var global_avg_pool(Var x);

/// input[N,D] * weight[O,D]^T + bias[O] -> [N,O].
Var dense(Var input, Var weight, Var bias);

/// 1 / (1 + exp(-z)), evaluated without overflow.
Var logistic(Var z);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var square(Var x);
/// Sum of all elements, shape {1}.
Var sum(Var x);
Var reshape(Var x, Shape shape);

double logistic(double z);

/// Bilinear resampling of map[h,w] to [target_h,target_w] using pixel
/// centres at (i + 0.5) and edge clamping. Returns an exact copy when the
/// target size equals the source size.
Tensor upsample_bilinear(const Tensor& map, std::size_t target_h, std::size_t target_w);

}  // namespace attrcam::ops
