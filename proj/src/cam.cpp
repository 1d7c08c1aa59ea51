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

#include "attrcam/cam.hpp"

#include <algorithm>

#include "attrcam/errors.hpp"
#include "attrcam/ops.hpp"

namespace attrcam {

const char* to_string(CamMethod m) {
  switch (m) {
    case CamMethod::GradCam: return "gradcam";
    case CamMethod::GradCamPlusPlus: return "gradcam_pp";
    case CamMethod::HiResCam: return "hirescam";
    case CamMethod::ElementWise: return "elementwise";
  }
  return "?";
}

const char* to_string(TargetMode t) { return t == TargetMode::Predicted ? "predicted" : "positive"; }

CamMethod parse_cam_method(const std::string& s) {
  for (auto m : kAllCamMethods) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown CAM method '" + s + "' (expected gradcam, gradcam_pp, hirescam or elementwise)");
}

TargetMode parse_target_mode(const std::string& s) {
  if (s == "predicted") return TargetMode::Predicted;
  if (s == "positive") return TargetMode::Positive;
  throw ConfigError("unknown target mode '" + s + "' (expected predicted or positive)");
}

int target_sign(double logit, TargetMode mode) {
  return mode == TargetMode::Positive ? 1 : decide(logit);
}

namespace {

void check_kgg(const Tensor& t, const char* what) {
  if (t.rank() != 3 || t.dim(1) != t.dim(2)) {
    throw DimensionError(std::string(what) + " must be [K, G, G], got " + shape_string(t.shape()));
  }
}

Tensor spatial_sums(const Tensor& t) {
  check_kgg(t, "gradient");
  const std::size_t k = t.dim(0), area = t.dim(1) * t.dim(2);
  Tensor out(Shape{k});
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < area; ++i) s += t[c * area + i];
    out[c] = s;
  }
  return out;
}

}  // namespace

Tensor categorical_channel_weights(const Tensor& grad) { return spatial_sums(grad); }

Tensor binary_channel_weights(const Tensor& grad, double logit) {
  const Tensor alpha = spatial_sums(grad);
  return decide(logit) > 0 ? alpha : -alpha;
}

Tensor gradcam_pp_weights(const Tensor& features, const Tensor& g) {
  check_kgg(features, "features");
  if (features.shape() != g.shape()) throw DimensionError("gradcam_pp: features and gradient shapes differ");
  const std::size_t k = g.dim(0), area = g.dim(1) * g.dim(2);
  Tensor alpha(Shape{k});
  for (std::size_t c = 0; c < k; ++c) {
    double fsum = 0.0;
    for (std::size_t i = 0; i < area; ++i) fsum += features[c * area + i];
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) {
      const double gv = g[c * area + i];
      const double g2 = gv * gv;
      const double denom = 2.0 * g2 + fsum * g2 * gv;
      const double a = denom != 0.0 ? g2 / denom : 0.0;
      acc += a * std::max(gv, 0.0);
    }
    alpha[c] = acc;
  }
  return alpha;
}

Tensor combine_map(CamMethod method, const Tensor& f, const Tensor& g) {
  check_kgg(f, "features");
  if (f.shape() != g.shape()) throw DimensionError("CAM: features and gradient shapes differ");
  const std::size_t k = f.dim(0), side = f.dim(1), area = side * side;
  Tensor map(Shape{side, side});

  switch (method) {
    case CamMethod::GradCam:
    case CamMethod::GradCamPlusPlus: {
      const Tensor alpha = method == CamMethod::GradCam ? spatial_sums(g) : gradcam_pp_weights(f, g);
      for (std::size_t i = 0; i < area; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += alpha[c] * f[c * area + i];
        map[i] = std::max(s, 0.0);
      }
      break;
    }
    case CamMethod::HiResCam:
      for (std::size_t i = 0; i < area; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += g[c * area + i] * f[c * area + i];
        map[i] = std::max(s, 0.0);
      }
      break;
    case CamMethod::ElementWise:
      for (std::size_t i = 0; i < area; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += std::max(g[c * area + i] * f[c * area + i], 0.0);
        map[i] = s;
      }
      break;
  }
  return map;
}

CamMap compute_cam(ForwardTrace& trace, std::size_t attribute, CamMethod method, TargetMode target) {
  const double z = trace.logit(attribute);
  const Tensor grad = trace.feature_gradients(attribute, target_sign(z, target));
  CamMap out;
  out.activation = combine_map(method, trace.features(), grad);
  const Tensor& image = trace.image();
  out.upscaled = ops::upsample_bilinear(out.activation, image.dim(1), image.dim(2));
  out.attribute = attribute;
  out.predicted_sign = decide(z);
  out.method = method;
  out.target = target;
  return out;
}

Tensor normalize_map(const Tensor& map) {
  const double m = map.max();
  if (!(m > 0.0)) return Tensor(map.shape());
  Tensor out = map;
  for (auto& v : out.values()) v = std::max(v, 0.0) / m;
  return out;
}

MapGroup::MapGroup(std::size_t attribute, int predicted_sign) : attribute_(attribute), sign_(predicted_sign) {
  if (predicted_sign != 1 && predicted_sign != -1) throw UsageError("MapGroup: predicted sign must be +1 or -1");
}

namespace {

void running_mean(Tensor& mean, const Tensor& x, double weight) {
  if (mean.shape() != x.shape()) throw DimensionError("MapGroup: shape changed between samples");
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (x[i] - mean[i]) * weight;
}

}  // namespace

void MapGroup::accumulate(const CamMap& map, const Tensor& image) {
  if (map.attribute != attribute_ || map.predicted_sign != sign_) {
    throw UsageError("MapGroup for attribute " + std::to_string(attribute_) + ", sign " + std::to_string(sign_) +
                     " cannot take a map of attribute " + std::to_string(map.attribute) + ", sign " +
                     std::to_string(map.predicted_sign));
  }
  const Tensor normalized = normalize_map(map.upscaled);
  ++count_;
  if (count_ == 1) {
    mean_map_ = normalized;
    mean_image_ = image;
    return;
  }
  const double w = 1.0 / static_cast<double>(count_);
  running_mean(*mean_map_, normalized, w);
  running_mean(*mean_image_, image, w);
}

void MapGroup::merge(const MapGroup& other) {
  if (other.attribute_ != attribute_ || other.sign_ != sign_) throw UsageError("MapGroup::merge: different cells");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double w = static_cast<double>(other.count_) / static_cast<double>(count_ + other.count_);
  running_mean(*mean_map_, *other.mean_map_, w);
  running_mean(*mean_image_, *other.mean_image_, w);
  count_ += other.count_;
}

const Tensor& MapGroup::mean_map() const {
  if (!mean_map_) throw UsageError("MapGroup is empty");
  return *mean_map_;
}

const Tensor& MapGroup::mean_image() const {
  if (!mean_image_) throw UsageError("MapGroup is empty");
  return *mean_image_;
}

MapGroup accumulate_group(MapGroup group, const CamMap& map, const Tensor& image) {
  group.accumulate(map, image);
  return group;
}

std::array<double, 3> colormap(double v) {
  v = std::clamp(v, 0.0, 1.0);
  if (v <= 0.5) return {0.0, 2.0 * v, 1.0 - 2.0 * v};
  return {2.0 * v - 1.0, 2.0 - 2.0 * v, 0.0};
}

Tensor render_overlay(const Tensor& image, const Tensor& map, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("render_overlay: alpha must lie in [0, 1]");
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw DimensionError("render_overlay: image must be [1|3, H, W], got " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2), area = h * w;
  if (map.shape() != Shape{h, w}) throw DimensionError("render_overlay: map must match the image size");
  Tensor out(Shape{3, h, w});
  for (std::size_t i = 0; i < area; ++i) {
    const double gray = image.dim(0) == 1
                            ? image[i]
                            : 0.299 * image[i] + 0.587 * image[area + i] + 0.114 * image[2 * area + i];
    const auto rgb = colormap(map[i]);
    for (std::size_t c = 0; c < 3; ++c) out[c * area + i] = alpha * rgb[c] + (1.0 - alpha) * gray;
  }
  return out;
}

}  // namespace attrcam
