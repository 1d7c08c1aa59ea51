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

#include <string>
#include <vector>

#include "attrcam/graph.hpp"
#include "attrcam/labels.hpp"
#include "attrcam/tensor.hpp"

namespace attrcam {

/// Fraction of +1 labels per attribute column.
struct ClassPriors {
  std::vector<double> positive;
};

/// Per-attribute multiplicative loss weights for the +1 and -1 class.
struct BalanceWeights {
  std::vector<double> positive;
  std::vector<double> negative;

  static BalanceWeights ones(std::size_t attributes);
  double weight(std::size_t attribute, int label) const {
    return label > 0 ? positive[attribute] : negative[attribute];
  }
  std::size_t size() const noexcept { return positive.size(); }

  friend bool operator==(const BalanceWeights&, const BalanceWeights&) = default;
};

/// p_m = (#rows with t_nm = +1) / N. Throws UsageError on an empty matrix.
ClassPriors class_priors(const LabelMatrix& labels);

/// Weights that give both classes of every attribute the same total mass:
/// the minority class is up-weighted by the majority/minority ratio and the
/// majority class keeps weight 1.
///
/// A prior of exactly 0 or 1 raises DegenerateAttributeError naming the
/// attribute (`names[m]` when provided).
BalanceWeights moon_weights(const ClassPriors& priors, const std::vector<std::string>& names = {});

/// J = (1/N) sum_n sum_m w_m(t_nm) (z_nm - t_nm)^2 for logits[N, M].
double weighted_euclidean_loss(const Tensor& logits, const LabelMatrix& labels, const BalanceWeights& weights);

/// dJ/dz = (2/N) w_m(t_nm) (z_nm - t_nm).
Tensor weighted_euclidean_loss_gradient(const Tensor& logits, const LabelMatrix& labels,
                                        const BalanceWeights& weights);

/// The same loss recorded as a graph node with shape {1}.
Var weighted_euclidean_loss(Var logits, const LabelMatrix& labels, const BalanceWeights& weights);

}  // namespace attrcam
