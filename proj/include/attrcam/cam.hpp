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
#include <optional>
#include <string>

#include "attrcam/network.hpp"
#include "attrcam/tensor.hpp"

namespace attrcam {

enum class CamMethod { GradCam, GradCamPlusPlus, HiResCam, ElementWise };

/// Which output the map explains.
///  - Predicted: the predicted class of the single binary output, i.e. the
///    gradient of |z| (that of z when z > 0, of -z otherwise).
///  - Positive: always the positive class, the gradient of z.
enum class TargetMode { Predicted, Positive };

inline constexpr std::array<CamMethod, 4> kAllCamMethods{CamMethod::GradCam, CamMethod::GradCamPlusPlus,
                                                         CamMethod::HiResCam, CamMethod::ElementWise};

const char* to_string(CamMethod m);
const char* to_string(TargetMode t);
CamMethod parse_cam_method(const std::string& s);
TargetMode parse_target_mode(const std::string& s);

struct CamMap {
  Tensor activation;  // A on the feature grid [G, G], nonnegative
  Tensor upscaled;    // A* on the image grid [H, W], bilinear upscale of A
  std::size_t attribute = 0;
  int predicted_sign = -1;
  CamMethod method = CamMethod::GradCam;
  TargetMode target = TargetMode::Predicted;
};

/// +1 or -1 factor applied to dz/df. Predicted mode follows the decision
/// rule, so z == 0 takes the negative branch.
int target_sign(double logit, TargetMode mode);

/// alpha_k = sum_(i,j) d|z|/df_k(i,j) computed from the positive-class
/// gradient `grad` = dz/df [K, G, G].
Tensor binary_channel_weights(const Tensor& grad, double logit);

/// alpha_k = sum_(i,j) dz/df_k(i,j).
Tensor categorical_channel_weights(const Tensor& grad);

/// Grad-CAM++ channel weights for features[K,G,G] and target gradient
/// g[K,G,G]: alpha_k = sum a_k(i,j) relu(g_k(i,j)) with
/// a = g^2 / (2 g^2 + sum_(u,v) f_k(u,v) g^3), and 0 where the denominator is 0.
Tensor gradcam_pp_weights(const Tensor& features, const Tensor& target_gradient);

/// Feature-grid map [G, G] (after the final ReLU) for one method.
Tensor combine_map(CamMethod method, const Tensor& features, const Tensor& target_gradient);

CamMap compute_cam(ForwardTrace& trace, std::size_t attribute, CamMethod method, TargetMode target);

inline CamMap grad_cam(ForwardTrace& t, std::size_t a, TargetMode m) {
  return compute_cam(t, a, CamMethod::GradCam, m);
}
inline CamMap grad_cam_pp(ForwardTrace& t, std::size_t a, TargetMode m) {
  return compute_cam(t, a, CamMethod::GradCamPlusPlus, m);
}
inline CamMap hires_cam(ForwardTrace& t, std::size_t a, TargetMode m) {
  return compute_cam(t, a, CamMethod::HiResCam, m);
}
inline CamMap elementwise_cam(ForwardTrace& t, std::size_t a, TargetMode m) {
  return compute_cam(t, a, CamMethod::ElementWise, m);
}

/// Divides by the maximum when it is positive; all-zero maps stay zero.
Tensor normalize_map(const Tensor& map);

/// Running mean of normalized upscaled maps (and of the images) for one
/// (attribute, predicted sign) cell.
class MapGroup {
 public:
  MapGroup(std::size_t attribute, int predicted_sign);

  /// Throws UsageError if the map belongs to another attribute or sign.
  void accumulate(const CamMap& map, const Tensor& image);
  /// Combines two partial groups of the same cell.
  void merge(const MapGroup& other);

  std::size_t attribute() const noexcept { return attribute_; }
  int predicted_sign() const noexcept { return sign_; }
  std::size_t count() const noexcept { return count_; }
  /// Empty groups have no mean; these throw UsageError.
  const Tensor& mean_map() const;
  const Tensor& mean_image() const;

 private:
  std::size_t attribute_;
  int sign_;
  std::size_t count_ = 0;
  std::optional<Tensor> mean_map_;
  std::optional<Tensor> mean_image_;
};

MapGroup accumulate_group(MapGroup group, const CamMap& map, const Tensor& image);

/// Blue -> green -> red ramp: 0 -> (0,0,1), 0.5 -> (0,1,0), 1 -> (1,0,0),
/// linear in between. Inputs are clamped to [0, 1].
std::array<double, 3> colormap(double v);

/// alpha * colormap(map) + (1 - alpha) * grayscale(image), as [3, H, W].
/// Grayscale uses 0.299 R + 0.587 G + 0.114 B for 3-channel images.
Tensor render_overlay(const Tensor& image, const Tensor& normalized_map, double alpha);

}  // namespace attrcam
