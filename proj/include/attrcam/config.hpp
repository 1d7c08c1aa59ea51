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
#include <optional>
#include <string>
#include <vector>

#include "attrcam/cam.hpp"
#include "attrcam/data.hpp"
#include "attrcam/network.hpp"
#include "attrcam/training.hpp"

namespace attrcam {

/// Everything a CLI run depends on besides its input files. Serialized as
/// JSON; unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  /// Root written by `generate`: train/, test/ and masks/catalog.txt.
  std::string data_dir = "data";
  /// Overrides for the individual locations; empty means "under data_dir".
  std::string train_dir;
  std::string test_dir;
  std::string catalog;
  /// Keep only samples whose frontal score is below this value.
  std::optional<double> frontal_threshold;

  SyntheticSpec synthetic = SyntheticSpec::standard();
  std::size_t train_samples = 4000;
  std::size_t test_samples = 1000;

  Architecture model;
  TrainConfig train;

  std::vector<CamMethod> methods{CamMethod::GradCam};
  TargetMode target = TargetMode::Predicted;
  double overlay_alpha = 0.5;
  /// Negatively predicted samples rendered per attribute by compare-targets.
  std::size_t compare_samples = 8;
  bool correct_only = false;

  std::filesystem::path train_path() const;
  std::filesystem::path test_path() const;
  std::filesystem::path catalog_path() const;

  /// Copies `seed` into the synthetic spec and the training config.
  void propagate_seed();
  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes `<dir>/config.resolved.json`.
void save_resolved_config(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace attrcam
