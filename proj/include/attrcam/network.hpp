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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attrcam/graph.hpp"
#include "attrcam/tensor.hpp"

namespace attrcam {

/// Shape of the convolutional trunk. Each entry of `channels` adds one
/// conv(kernel x kernel, same padding) -> relu -> avgpool(pool) block.
/// With no blocks the image itself is the feature map, which gives the
/// analytically tractable "GAP-linear" model used in tests.
struct Architecture {
  std::size_t in_channels = 1;
  std::size_t image_size = 32;
  std::vector<std::size_t> channels{8, 16};
  std::size_t kernel = 3;
  std::size_t pool = 2;

  /// Side length G of the final feature map.
  std::size_t feature_grid() const;
  /// Channel count K of the final feature map.
  std::size_t feature_channels() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ConvBlock {
  Tensor kernel;  // [out, in, k, k]
  Tensor bias;    // [out]

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

/// Convolutional trunk + global average pooling + one logit head per
/// attribute: z_m = w_m . phi + b_m.
class AttributeModel {
 public:
  AttributeModel(Architecture arch, std::vector<ConvBlock> blocks, Tensor head_weight, Tensor head_bias,
                 std::vector<std::string> attributes);

  /// Uniform init in [-a, a], a = sqrt(1 / fan_in), for every weight and bias.
  static AttributeModel initialize(const Architecture& arch, std::vector<std::string> attributes,
                                   std::uint64_t seed);

  const Architecture& architecture() const noexcept { return arch_; }
  const std::vector<ConvBlock>& blocks() const noexcept { return blocks_; }
  const Tensor& head_weight() const noexcept { return head_weight_; }  // [M, K]
  const Tensor& head_bias() const noexcept { return head_bias_; }      // [M]
  const std::vector<std::string>& attributes() const noexcept { return attributes_; }
  std::size_t attribute_count() const noexcept { return attributes_.size(); }

  /// Parameters in a fixed order: block kernels and biases, then head weight and bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  friend bool operator==(const AttributeModel&, const AttributeModel&) = default;

 private:
  void validate() const;

  Architecture arch_;
  std::vector<ConvBlock> blocks_;
  Tensor head_weight_;
  Tensor head_bias_;
  std::vector<std::string> attributes_;
};

/// Graph nodes produced by one pass through the model.
struct ForwardNodes {
  Var features;  // [N, K, G, G]
  Var pooled;    // [N, K]
  Var logits;    // [N, M]
};

/// Model parameters registered as leaves of a graph, in `parameters()` order.
struct BoundParameters {
  std::vector<Var> vars;
};

BoundParameters bind_parameters(Graph& graph, const AttributeModel& model, bool requires_grad);

/// Records a batched forward pass of images[N, C, H, W].
ForwardNodes forward_nodes(const AttributeModel& model, const BoundParameters& params, Var images);

/// Recorded single-image forward pass. Holds the graph so gradients of any
/// logit with respect to the feature map can be requested afterwards.
/// Not thread-safe; one consumer per trace.
class ForwardTrace {
 public:
  ForwardTrace(const AttributeModel& model, const Tensor& image);
  ForwardTrace(ForwardTrace&&) noexcept;
  ForwardTrace& operator=(ForwardTrace&&) noexcept;
  ~ForwardTrace();

  const Tensor& image() const noexcept { return image_; }
  const Tensor& features() const noexcept { return features_; }  // [K, G, G]
  const Tensor& pooled() const noexcept { return pooled_; }      // [K]
  const Tensor& logits() const noexcept { return logits_; }      // [M]
  double logit(std::size_t attribute) const;
  std::size_t attribute_count() const noexcept { return logits_.size(); }

  /// d(signed_target * z_m) / d f, shape [K, G, G]. The backward pass runs
  /// once per attribute; later requests reuse the cached result.
  Tensor feature_gradients(std::size_t attribute, int signed_target);

  /// Frees the recording graph. Gradients that were already computed stay
  /// available; any other request becomes a UsageError.
  void release();
  bool released() const noexcept { return graph_ == nullptr; }

 private:
  std::unique_ptr<Graph> graph_;
  ForwardNodes nodes_;
  Tensor image_;
  Tensor features_;
  Tensor pooled_;
  Tensor logits_;
  std::vector<std::optional<Tensor>> gradients_;
};

ForwardTrace forward(const AttributeModel& model, const Tensor& image);

/// Decision rule shared by prediction and CAM targeting: positive iff z > 0.
inline int decide(double logit) { return logit > 0.0 ? 1 : -1; }

/// One +1/-1 decision per attribute.
std::vector<int> predict(const AttributeModel& model, const Tensor& image);

/// Logits for a batch images[N, C, H, W] without keeping a trace.
Tensor predict_logits(const AttributeModel& model, const Tensor& images);

void save_checkpoint(const AttributeModel& model, std::ostream& out);
void save_checkpoint(const AttributeModel& model, const std::filesystem::path& path);
AttributeModel load_checkpoint(std::istream& in);
AttributeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace attrcam
