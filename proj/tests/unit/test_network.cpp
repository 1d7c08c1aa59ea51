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

#include <gtest/gtest.h>

#include <sstream>

#include "attrcam/errors.hpp"
#include "attrcam/network.hpp"
#include "attrcam/ops.hpp"
#include "test_support.hpp"

namespace attrcam {
namespace {

using testing::gap_linear;
using testing::random_model;
using testing::random_tensor;

AttributeModel zero_conv_model(double bias) {
  Architecture arch;
  arch.image_size = 8;
  AttributeModel m = AttributeModel::initialize(arch, {"a", "b"}, 1);
  for (Tensor* p : m.parameters()) *p = Tensor(p->shape());
  auto params = m.parameters();
  *params.back() = Tensor::vector({bias, bias});
  return m;
}

TEST(Forward, BiasOnlyPath) {
  const AttributeModel m = zero_conv_model(0.7);
  ForwardTrace t(m, Tensor(Shape{1, 8, 8}));
  EXPECT_EQ(t.logit(0), 0.7);
  EXPECT_EQ(ops::logistic(t.logit(1)), ops::logistic(0.7));
}

TEST(Forward, ZeroHeadIgnoresImage) {
  Rng rng(1);
  Architecture arch;
  arch.image_size = 8;
  AttributeModel m = random_model(rng, arch, 2);
  auto params = m.parameters();
  *params[params.size() - 2] = Tensor(params[params.size() - 2]->shape());
  *params.back() = Tensor::vector({-0.3, 1.25});
  for (int i = 0; i < 5; ++i) {
    ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
    EXPECT_EQ(t.logits(), Tensor::vector({-0.3, 1.25}));
  }
}

TEST(Forward, HandComputedSingleChannelModel) {
  // conv: centre tap 1, bias -5 (identity minus 5); relu; 2x2 mean pool;
  // GAP; head w = 2, b = 0.5. Image 1..16 on a 4x4 grid.
  Architecture arch;
  arch.image_size = 4;
  arch.channels = {1};
  Tensor kernel(Shape{1, 1, 3, 3});
  kernel.at({0, 0, 1, 1}) = 1.0;
  AttributeModel m(arch, {ConvBlock{kernel, Tensor::vector({-5})}}, Tensor::matrix({{2}}), Tensor::vector({0.5}),
                   {"x"});
  Tensor image(Shape{1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) image[i] = static_cast<double>(i + 1);
  ForwardTrace t(m, image);
  // relu(v - 5): 0 0 0 0 / 0 1 2 3 / 4 5 6 7 / 8 9 10 11
  // pooled blocks: 0.25, 1.25, 6.5, 8.5; GAP = 4.125; z = 2 * 4.125 + 0.5.
  EXPECT_EQ(t.features(), Tensor(Shape{1, 2, 2}, {0.25, 1.25, 6.5, 8.5}));
  EXPECT_EQ(t.pooled(), Tensor::vector({4.125}));
  EXPECT_EQ(t.logit(0), 8.75);
}

TEST(Forward, LogitsMatchHeadApplication) {
  Rng rng(2);
  Architecture arch;
  arch.image_size = 8;
  arch.channels = {3, 4};
  for (int trial = 0; trial < 20; ++trial) {
    const AttributeModel m = random_model(rng, arch, 3);
    ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
    const std::size_t k = t.features().dim(0), area = t.features().dim(1) * t.features().dim(2);
    for (std::size_t c = 0; c < k; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < area; ++i) mean += t.features()[c * area + i];
      EXPECT_NEAR(t.pooled()[c], mean / static_cast<double>(area), 1e-12);
    }
    for (std::size_t a = 0; a < 3; ++a) {
      double z = m.head_bias()[a];
      for (std::size_t c = 0; c < k; ++c) z += m.head_weight().at({a, c}) * t.pooled()[c];
      EXPECT_NEAR(t.logit(a), z, 1e-12);
    }
  }
}

TEST(Forward, ShapeMismatchIsConfigError) {
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = AttributeModel::initialize(arch, {"a"}, 1);
  EXPECT_THROW(ForwardTrace(m, Tensor(Shape{1, 16, 16})), ConfigError);
  EXPECT_THROW(ForwardTrace(m, Tensor(Shape{3, 8, 8})), ConfigError);
  EXPECT_THROW(ForwardTrace(m, Tensor(Shape{8, 8})), ConfigError);
}

TEST(Forward, Deterministic) {
  Rng rng(3);
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = random_model(rng, arch, 2);
  const Tensor img = random_tensor(rng, {1, 8, 8}, 0, 1);
  ForwardTrace a(m, img), b(m, img);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_EQ(a.logits(), b.logits());
  EXPECT_EQ(a.feature_gradients(1, 1), b.feature_gradients(1, 1));
}

TEST(Predict, DecisionRule) {
  EXPECT_EQ(decide(0.3), 1);
  EXPECT_EQ(decide(-0.3), -1);
  EXPECT_EQ(decide(0.0), -1);
  EXPECT_EQ(decide(-0.0), -1);
}

TEST(Predict, AgreesWithLogisticThreshold) {
  Rng rng(4);
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = random_model(rng, arch, 4, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Tensor img = random_tensor(rng, {1, 8, 8}, 0, 1);
    const auto d = predict(m, img);
    ForwardTrace t(m, img);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(d[a], ops::logistic(t.logit(a)) > 0.5 ? 1 : -1);
  }
}

TEST(Predict, BatchLogitsMatchTraces) {
  Rng rng(5);
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = random_model(rng, arch, 2);
  const Tensor batch = random_tensor(rng, {3, 1, 8, 8}, 0, 1);
  const Tensor z = predict_logits(m, batch);
  for (std::size_t n = 0; n < 3; ++n) {
    Tensor img(Shape{1, 8, 8});
    for (std::size_t i = 0; i < 64; ++i) img[i] = batch[n * 64 + i];
    ForwardTrace t(m, img);
    for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(z.at({n, a}), t.logit(a), 1e-12);
  }
}

TEST(FeatureGradients, SignIdentity) {
  Rng rng(6);
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = random_model(rng, arch, 3);
  ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(t.feature_gradients(a, -1), -t.feature_gradients(a, 1));
}

TEST(FeatureGradients, GapLinearIsUniform) {
  Rng rng(7);
  const AttributeModel m = random_model(rng, gap_linear(2, 4), 2);
  ForwardTrace t(m, random_tensor(rng, {2, 4, 4}, 0, 1));
  const Tensor g = t.feature_gradients(1, 1);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(g[c * 16 + i], m.head_weight().at({1, c}) / 16.0, 1e-15);
  }
}

TEST(FeatureGradients, ZeroHeadGivesZero) {
  Rng rng(8);
  Architecture arch;
  arch.image_size = 8;
  AttributeModel m = random_model(rng, arch, 1);
  auto params = m.parameters();
  *params[params.size() - 2] = Tensor(params[params.size() - 2]->shape());
  ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
  EXPECT_EQ(t.feature_gradients(0, 1).sum(), 0.0);
  EXPECT_EQ(t.feature_gradients(0, 1).max(), 0.0);
}

TEST(FeatureGradients, MatchesFiniteDifferencesOnFeatures) {
  Rng rng(9);
  Architecture arch;
  arch.image_size = 8;
  arch.channels = {2, 3};
  const AttributeModel m = random_model(rng, arch, 2);
  ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
  // z as a function of f alone: GAP then the head row.
  auto z_of_f = [&](const Tensor& f) {
    const std::size_t k = f.dim(0), area = f.dim(1) * f.dim(2);
    double z = m.head_bias()[1];
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < area; ++i) s += f[c * area + i];
      z += m.head_weight().at({1, c}) * s / static_cast<double>(area);
    }
    return z;
  };
  EXPECT_NEAR(z_of_f(t.features()), t.logit(1), 1e-12);
  const Tensor fd = testing::numeric_gradient(z_of_f, t.features());
  EXPECT_LT(testing::relative_error(fd, t.feature_gradients(1, 1)), 1e-6);
}

TEST(FeatureGradients, ReleasedTraceKeepsCachedResults) {
  Rng rng(10);
  Architecture arch;
  arch.image_size = 8;
  const AttributeModel m = random_model(rng, arch, 2);
  ForwardTrace t(m, random_tensor(rng, {1, 8, 8}, 0, 1));
  const Tensor g0 = t.feature_gradients(0, 1);
  t.release();
  EXPECT_TRUE(t.released());
  EXPECT_EQ(t.feature_gradients(0, -1), -g0);
  EXPECT_THROW(t.feature_gradients(1, 1), UsageError);
  EXPECT_THROW(t.feature_gradients(5, 1), UsageError);
  EXPECT_THROW(t.feature_gradients(0, 2), UsageError);
}

TEST(Initialize, SeededAndBounded) {
  Architecture arch;
  const AttributeModel a = AttributeModel::initialize(arch, {"x", "y"}, 11);
  const AttributeModel b = AttributeModel::initialize(arch, {"x", "y"}, 11);
  const AttributeModel c = AttributeModel::initialize(arch, {"x", "y"}, 12);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  EXPECT_EQ(a.architecture().feature_grid(), 8u);
  EXPECT_EQ(a.head_weight().shape(), (Shape{2, 16}));
  const double bound0 = std::sqrt(1.0 / 9.0);
  EXPECT_LE(std::max(a.blocks()[0].kernel.max(), -a.blocks()[0].kernel.min()), bound0);
  const double bound1 = std::sqrt(1.0 / 72.0);
  EXPECT_LE(std::max(a.blocks()[1].kernel.max(), -a.blocks()[1].kernel.min()), bound1);
}

TEST(Architecture, Validation) {
  Architecture a;
  a.image_size = 30;
  EXPECT_THROW(a.validate(), ConfigError);
  a = Architecture{};
  a.kernel = 2;
  EXPECT_THROW(a.validate(), ConfigError);
  a = Architecture{};
  a.channels = {8, 0};
  EXPECT_THROW(a.validate(), ConfigError);
  EXPECT_THROW(AttributeModel::initialize(Architecture{}, {}, 1), ConfigError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(13);
  Architecture arch;
  arch.channels = {3, 5};
  const AttributeModel m = random_model(rng, arch, 3);
  std::stringstream ss;
  save_checkpoint(m, ss);
  const std::string bytes = ss.str();
  const AttributeModel back = load_checkpoint(ss);
  EXPECT_EQ(back, m);
  std::stringstream again;
  save_checkpoint(back, again);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream bad("not a checkpoint at all");
  EXPECT_THROW(load_checkpoint(bad), DataError);
  const AttributeModel m = AttributeModel::initialize(Architecture{}, {"a"}, 1);
  std::stringstream ss;
  save_checkpoint(m, ss);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(truncated), DataError);
  EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/model.ckpt")), IoError);
}

}  // namespace
}  // namespace attrcam
