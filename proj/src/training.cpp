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

#include "attrcam/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "attrcam/csv.hpp"
#include "attrcam/errors.hpp"
#include "attrcam/graph.hpp"
#include "attrcam/rng.hpp"

namespace attrcam {

const char* to_string(BalanceMode m) { return m == BalanceMode::Balanced ? "balanced" : "unbalanced"; }

BalanceMode parse_balance_mode(const std::string& s) {
  if (s == "unbalanced") return BalanceMode::Unbalanced;
  if (s == "balanced") return BalanceMode::Balanced;
  throw ConfigError("unknown training mode '" + s + "' (expected unbalanced or balanced)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
}

BalanceWeights weights_for(BalanceMode mode, const Dataset& train_set) {
  if (mode == BalanceMode::Unbalanced) return BalanceWeights::ones(train_set.attributes.size());
  return moon_weights(class_priors(train_set.labels()), train_set.attributes);
}

TrainResult train_with_weights(AttributeModel model, const Dataset& train_set, const BalanceWeights& weights,
                               const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw UsageError("train: empty training set");
  if (train_set.attributes != model.attributes()) {
    throw ConfigError("train: dataset attributes do not match the model's attributes");
  }
  const std::size_t m_count = model.attribute_count();
  if (weights.size() != m_count) throw DimensionError("train: one weight pair per attribute required");

  std::vector<Tensor*> params = model.parameters();
  std::vector<Tensor> velocity;
  for (const Tensor* p : params) velocity.emplace_back(p->shape());

  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochStats> history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::vector<std::size_t> tp(m_count), fn(m_count), fp(m_count), tn(m_count);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> label_values;
      label_values.reserve(idx.size() * m_count);
      for (auto i : idx) label_values.insert(label_values.end(), train_set.samples[i].labels.begin(),
                                             train_set.samples[i].labels.end());
      const LabelMatrix labels(idx.size(), m_count, std::move(label_values));

      try {
        Graph graph;
        const BoundParameters bound = bind_parameters(graph, model, true);
        const Var images = graph.input(train_set.batch(idx), false);
        const ForwardNodes nodes = forward_nodes(model, bound, images);
        const Var loss = weighted_euclidean_loss(nodes.logits, labels, weights);
        graph.backward(loss, Tensor::scalar(1.0));

        const Tensor& z = nodes.logits.value();
        for (std::size_t n = 0; n < idx.size(); ++n) {
          for (std::size_t m = 0; m < m_count; ++m) {
            const bool pred = decide(z[n * m_count + m]) > 0, truth = labels(n, m) > 0;
            if (truth) {
              ++(pred ? tp : fn)[m];
            } else {
              ++(pred ? fp : tn)[m];
            }
          }
        }
        loss_sum += loss.value()[0] * static_cast<double>(idx.size());

        for (std::size_t k = 0; k < params.size(); ++k) {
          const Tensor& g = bound.vars[k].grad();
          Tensor& v = velocity[k];
          Tensor& p = *params[k];
          for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = config.momentum * v[i] + g[i];
            p[i] -= config.learning_rate * v[i];
          }
          if (!p.all_finite()) throw NumericError("parameters became non-finite");
        }
      } catch (const NumericError& e) {
        throw NumericError("training diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    for (std::size_t m = 0; m < m_count; ++m) {
      stats.fnr.push_back(tp[m] + fn[m] ? std::optional<double>(static_cast<double>(fn[m]) /
                                                                static_cast<double>(tp[m] + fn[m]))
                                        : std::nullopt);
      stats.fpr.push_back(fp[m] + tn[m] ? std::optional<double>(static_cast<double>(fp[m]) /
                                                                static_cast<double>(fp[m] + tn[m]))
                                        : std::nullopt);
    }
    history.push_back(std::move(stats));
  }
  return TrainResult{std::move(model), std::move(history), weights};
}

TrainResult train(AttributeModel init, const Dataset& train_set, const TrainConfig& config) {
  return train_with_weights(std::move(init), train_set, weights_for(config.mode, train_set), config);
}

void write_loss_csv(const std::vector<EpochStats>& history, const std::vector<std::string>& attributes,
                    std::ostream& out) {
  std::vector<std::string> header{"epoch", "mean_loss"};
  for (const auto& a : attributes) {
    header.push_back(a + "_fnr");
    header.push_back(a + "_fpr");
  }
  write_csv_row(out, header);
  auto cell = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string("NA"); };
  for (const auto& s : history) {
    std::vector<std::string> row{std::to_string(s.epoch), csv_number(s.mean_loss)};
    for (std::size_t m = 0; m < s.fnr.size(); ++m) {
      row.push_back(cell(s.fnr[m]));
      row.push_back(cell(s.fpr[m]));
    }
    write_csv_row(out, row);
  }
}

}  // namespace attrcam
