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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrcam/balancing.hpp"
#include "attrcam/data.hpp"
#include "attrcam/network.hpp"

namespace attrcam {

enum class BalanceMode { Unbalanced, Balanced };

const char* to_string(BalanceMode m);
BalanceMode parse_balance_mode(const std::string& s);

struct TrainConfig {
  BalanceMode mode = BalanceMode::Unbalanced;
  std::size_t epochs = 80;
  std::size_t batch_size = 16;
  double learning_rate = 0.004;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Mean loss and training error rates of one epoch. Rates come from the
/// predictions made on each batch before its update.
struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::vector<std::optional<double>> fnr;
  std::vector<std::optional<double>> fpr;
};

struct TrainResult {
  AttributeModel model;
  std::vector<EpochStats> history;
  BalanceWeights weights;
};

/// Loss weights for a mode: all ones when unbalanced, MOON weights from the
/// training priors when balanced.
BalanceWeights weights_for(BalanceMode mode, const Dataset& train_set);

/// SGD with momentum on the weighted Euclidean loss, starting from `init`.
/// Batches are drawn from a per-epoch shuffle seeded by `config.seed`.
/// A non-finite loss or gradient raises NumericError naming the epoch.
TrainResult train_with_weights(AttributeModel init, const Dataset& train_set, const BalanceWeights& weights,
                               const TrainConfig& config);

/// train_with_weights(init, train_set, weights_for(config.mode, train_set), config).
TrainResult train(AttributeModel init, const Dataset& train_set, const TrainConfig& config);

/// CSV `epoch,mean_loss,<attr>_fnr,<attr>_fpr,...`; missing rates are NA.
void write_loss_csv(const std::vector<EpochStats>& history, const std::vector<std::string>& attributes,
                    std::ostream& out);

}  // namespace attrcam
