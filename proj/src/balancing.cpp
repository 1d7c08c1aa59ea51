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

#include "attrcam/balancing.hpp"

#include "attrcam/errors.hpp"

namespace attrcam {

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t cols, std::vector<int> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("label matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " needs " +
                         std::to_string(rows_ * cols_) + " values");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != 1 && values_[i] != -1) {
      throw DataError("label " + std::to_string(values_[i]) + " at row " + std::to_string(i / cols_) +
                      ", column " + std::to_string(i % cols_) + " is not +1/-1");
    }
  }
}

DegenerateAttributeError::DegenerateAttributeError(std::string attribute, double prior)
    : DataError("attribute '" + attribute + "' has degenerate positive prior " + std::to_string(prior) +
                "; class balancing needs both classes in the training data"),
      attribute_(std::move(attribute)) {}

BalanceWeights BalanceWeights::ones(std::size_t attributes) {
  return BalanceWeights{std::vector<double>(attributes, 1.0), std::vector<double>(attributes, 1.0)};
}

ClassPriors class_priors(const LabelMatrix& labels) {
  if (labels.rows() == 0) throw UsageError("class_priors: empty label set");
  ClassPriors priors{std::vector<double>(labels.cols(), 0.0)};
  for (std::size_t m = 0; m < labels.cols(); ++m) {
    std::size_t count = 0;
    for (std::size_t n = 0; n < labels.rows(); ++n) count += labels(n, m) == 1;
    priors.positive[m] = static_cast<double>(count) / static_cast<double>(labels.rows());
  }
  return priors;
}

BalanceWeights moon_weights(const ClassPriors& priors, const std::vector<std::string>& names) {
  const std::size_t m_count = priors.positive.size();
  BalanceWeights w = BalanceWeights::ones(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double p = priors.positive[m];
    if (!(p > 0.0 && p < 1.0)) {
      throw DegenerateAttributeError(m < names.size() ? names[m] : "#" + std::to_string(m), p);
    }
    if (p > 0.5) {
      w.negative[m] = p / (1.0 - p);
    } else {
      w.positive[m] = (1.0 - p) / p;
    }
  }
  return w;
}

namespace {

void check_loss_inputs(const Tensor& z, const LabelMatrix& t, const BalanceWeights& w) {
  if (z.rank() != 2 || z.dim(0) != t.rows() || z.dim(1) != t.cols()) {
    throw DimensionError("loss: logits " + shape_string(z.shape()) + " vs labels " + std::to_string(t.rows()) +
                         "x" + std::to_string(t.cols()));
  }
  if (w.positive.size() != t.cols() || w.negative.size() != t.cols()) {
    throw DimensionError("loss: weight vectors must have one entry per attribute");
  }
}

}  // namespace

double weighted_euclidean_loss(const Tensor& z, const LabelMatrix& t, const BalanceWeights& w) {
  check_loss_inputs(z, t, w);
  const std::size_t n = t.rows(), m_count = t.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      const double d = z[i * m_count + m] - t(i, m);
      total += w.weight(m, t(i, m)) * d * d;
    }
  }
  return total / static_cast<double>(n);
}

Tensor weighted_euclidean_loss_gradient(const Tensor& z, const LabelMatrix& t, const BalanceWeights& w) {
  check_loss_inputs(z, t, w);
  const std::size_t n = t.rows(), m_count = t.cols();
  Tensor g(z.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      g[i * m_count + m] =
          2.0 / static_cast<double>(n) * w.weight(m, t(i, m)) * (z[i * m_count + m] - t(i, m));
    }
  }
  return g;
}

Var weighted_euclidean_loss(Var logits, const LabelMatrix& labels, const BalanceWeights& weights) {
  Tensor value = Tensor::scalar(weighted_euclidean_loss(logits.value(), labels, weights));
  return logits.graph->record("weighted_euclidean_loss", std::move(value), {logits},
                              [labels, weights](const BackwardContext& ctx) {
                                if (!ctx.input_grads[0]) return;
                                const Tensor g = weighted_euclidean_loss_gradient(*ctx.inputs[0], labels, weights);
                                Tensor& dz = *ctx.input_grads[0];
                                for (std::size_t i = 0; i < dz.size(); ++i) dz[i] += ctx.output_grad[0] * g[i];
                              });
}

}  // namespace attrcam
