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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attrcam/labels.hpp"
#include "attrcam/masks.hpp"
#include "attrcam/tensor.hpp"

namespace attrcam {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Five facial landmarks in pixel coordinates.
struct Landmarks {
  Point left_eye;
  Point right_eye;
  Point nose;
  Point left_mouth;
  Point right_mouth;

  friend bool operator==(const Landmarks&, const Landmarks&) = default;
};

struct Sample {
  std::string name;  // image file name, e.g. "000017.png"
  Tensor image;      // [C, H, W], values in [0, 1]
  std::vector<int> labels;
  Landmarks landmarks;
};

struct Dataset {
  std::vector<std::string> attributes;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  LabelMatrix labels() const;
  /// Images stacked into [N, C, H, W] for the given sample indices.
  Tensor batch(const std::vector<std::size_t>& indices) const;
};

/// Rectangle on the feature grid, in cells.
struct GridRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t rows = 1;
  std::size_t cols = 1;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row && r < row + rows && c >= col && c < col + cols;
  }
};

/// Patch blends the region towards a uniform `patch_level`, covering the
/// face content by the amplitude fraction; the others add +amplitude /
/// -amplitude per pixel.
enum class Pattern { Patch, HorizontalStripes, VerticalStripes, Checker };

const char* to_string(Pattern p);
Pattern parse_pattern(const std::string& s);

struct SyntheticAttribute {
  std::string name;
  double prior = 0.5;
  GridRect region;
  Pattern pattern = Pattern::Patch;
  /// Pattern contrast is drawn uniformly from [min_amplitude, max_amplitude]
  /// for every positive sample; low draws make some positives hard to see.
  double min_amplitude = 0.0;
  double max_amplitude = 0.2;
  /// Intensity a Patch blends towards.
  double patch_level = 0.9;
  /// Name of the ground-truth mask; defaults to the attribute name.
  std::string mask;
  /// Standard deviation of a Gaussian term added to the amplitude of every
  /// sample, negatives included, so the two classes overlap.
  double amplitude_jitter = 0.0;
  /// Constant added to the amplitude of every sample. A positive offset keeps
  /// jittered negatives brighter than the background.
  double amplitude_offset = 0.0;
};

/// Recipe for a desk-scale attribute dataset: a noisy face-like gray image
/// on which every positive attribute paints a texture into its own block
/// region. Negative samples leave the region as background unless the
/// attribute has amplitude jitter.
struct SyntheticSpec {
  std::size_t image_size = 32;
  std::size_t grid = 8;
  std::size_t channels = 1;
  double noise = 0.05;
  /// Maximum sideways nose offset relative to the eye-mouth distance, before
  /// the small landmark jitter.
  double max_yaw = 0.2;
  /// Face and background intensities are shifted per sample by independent
  /// offsets drawn from [-lighting, lighting].
  double lighting = 0.0;
  /// Number of grid cells that attribute regions may share in total.
  std::size_t overlap_budget = 0;
  std::uint64_t seed = 1;
  std::vector<SyntheticAttribute> attributes;

  std::size_t block() const { return image_size / grid; }
  /// Throws ConfigError naming the offending attribute.
  void validate() const;

  /// Three attributes with priors 0.5, 0.2 and 0.05 in disjoint regions.
  static SyntheticSpec standard();
};

struct GeneratedData {
  Dataset dataset;
  MaskCatalog catalog;
};

/// Exact-count labels per attribute (round(p * n) positives, shuffled),
/// rendered images and landmarks. Fully determined by `spec.seed` and the
/// stream offset, so train/test splits can share a spec.
GeneratedData generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t stream = 0);

/// Ground-truth masks for a spec, one per distinct mask name.
MaskCatalog synthetic_catalog(const SyntheticSpec& spec);

/// Distance of the nose from the line through the eye centre and the mouth
/// centre, relative to the eye-centre/mouth-centre distance.
double frontal_score(const Landmarks& landmarks);

/// Samples whose frontal score is strictly below `threshold`.
Dataset filter_frontal(const Dataset& dataset, double threshold = 0.1);

/// Writes images/<name>, labels.csv and landmarks.csv under `dir`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads a CelebA-style split. Labels in {0,1} are mapped to {-1,+1} with a
/// warning on stderr; any other token is a DataError.
Dataset load_dataset(const std::filesystem::path& image_dir, const std::filesystem::path& label_file,
                     const std::filesystem::path& landmark_file);

/// load_dataset on the layout written by save_dataset.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace attrcam
