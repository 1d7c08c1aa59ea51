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

#include <cmath>
#include <limits>

#include "attrcam/errors.hpp"
#include "attrcam/graph.hpp"
#include "attrcam/ops.hpp"
#include "attrcam/tensor.hpp"
#include "test_support.hpp"

namespace attrcam {
namespace {

using testing::random_tensor;

TEST(Tensor, ShapeAndAccess) {
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  t.at({1, 2}) = 4.0;
  EXPECT_EQ(t[5], 4.0);
  EXPECT_DOUBLE_EQ(t.sum(), 5 * 1.5 + 4.0);
  EXPECT_EQ(t.max(), 4.0);
  EXPECT_EQ(t.min(), 1.5);
  EXPECT_THROW(t.at({2, 0}), DimensionError);
  EXPECT_THROW(t.at({0}), DimensionError);
}

TEST(Tensor, RejectsZeroDimensionsAndSizeMismatch) {
  EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), DimensionError);
}

TEST(Tensor, ReshapeKeepsValues) {
  const Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.at({2, 1}), 6.0);
  EXPECT_THROW(t.reshaped({4}), DimensionError);
}

TEST(Tensor, EqualityIsBitwise) {
  Tensor a = Tensor::vector({0.0, 1.0});
  Tensor b = Tensor::vector({-0.0, 1.0});
  EXPECT_FALSE(a == b);
  EXPECT_TRUE(a == Tensor::vector({0.0, 1.0}));
  EXPECT_FALSE(a == a.reshaped({1, 2}));
}

TEST(Tensor, Arithmetic) {
  const Tensor a = Tensor::vector({1, 2}), b = Tensor::vector({3, 5});
  EXPECT_EQ(a + b, Tensor::vector({4, 7}));
  EXPECT_EQ(b - a, Tensor::vector({2, 3}));
  EXPECT_EQ(2.0 * a, Tensor::vector({2, 4}));
  EXPECT_EQ(-a, Tensor::vector({-1, -2}));
  EXPECT_EQ(max_abs_diff(a, b), 3.0);
  EXPECT_THROW(a + Tensor::vector({1}), DimensionError);
  EXPECT_FALSE(Tensor::vector({1, std::numeric_limits<double>::infinity()}).all_finite());
}

// --- graph ------------------------------------------------------------------

TEST(Graph, LinearChain) {
  Graph g;
  Var x = g.input(Tensor::scalar(2.0));
  Var z = ops::scale(x, 3.0);
  g.backward(z, Tensor::scalar(1.0));
  EXPECT_EQ(x.grad()[0], 3.0);
}

TEST(Graph, ReluSquareChain) {
  Graph g;
  Var x = g.input(Tensor::scalar(2.0));
  Var z = ops::square(ops::relu(x));
  g.backward(z, Tensor::scalar(1.0));
  EXPECT_EQ(x.grad()[0], 4.0);
}

TEST(Graph, ZeroSeedGivesZeroGradients) {
  Rng rng(3);
  Graph g;
  Var x = g.input(random_tensor(rng, {2, 3}));
  Var w = g.input(random_tensor(rng, {4, 3}));
  Var b = g.input(random_tensor(rng, {4}));
  Var y = ops::logistic(ops::dense(x, w, b));
  g.backward(y, Tensor(Shape{2, 4}));
  for (Var v : {x, w, b}) EXPECT_EQ(v.grad().sum(), 0.0);
}

TEST(Graph, RepeatedBackwardResetsSlots) {
  Graph g;
  Var x = g.input(Tensor::scalar(2.0));
  Var z = ops::square(x);
  g.backward(z, Tensor::scalar(1.0));
  g.backward(z, Tensor::scalar(1.0));
  EXPECT_EQ(x.grad()[0], 4.0);
  g.backward(z, Tensor::scalar(0.5));
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(Graph, Errors) {
  Graph g, other;
  Var x = g.input(Tensor::vector({1, 2}));
  Var foreign = other.input(Tensor::scalar(1.0));
  EXPECT_THROW(g.backward(foreign, Tensor::scalar(1.0)), UsageError);
  EXPECT_THROW(g.backward(x, Tensor::scalar(1.0)), DimensionError);
  EXPECT_THROW(g.input(Tensor::scalar(std::nan(""))), NumericError);
  Var big = g.input(Tensor::scalar(1e200));
  EXPECT_THROW(ops::square(big), NumericError);
}

TEST(Graph, BackwardIsDeterministic) {
  Rng rng(5);
  const Tensor xin = random_tensor(rng, {1, 2, 5, 5});
  const Tensor kin = random_tensor(rng, {3, 2, 3, 3});
  const Tensor bin = random_tensor(rng, {3});
  auto run = [&] {
    Graph g;
    Var x = g.input(xin), k = g.input(kin), b = g.input(bin);
    Var y = ops::sum(ops::square(ops::relu(ops::conv2d(x, k, b, 1, 1))));
    g.backward(y, Tensor::scalar(1.0));
    return std::vector<Tensor>{x.grad(), k.grad(), b.grad()};
  };
  EXPECT_EQ(run(), run());
}

TEST(Graph, NoGradInputsGetNoGradient) {
  Graph g;
  Var x = g.input(Tensor::scalar(2.0), false);
  Var w = g.input(Tensor::scalar(3.0));
  g.backward(ops::mul(x, w), Tensor::scalar(1.0));
  EXPECT_FALSE(g.requires_grad(x));
  EXPECT_EQ(w.grad()[0], 2.0);
}

// --- primitives: hand examples -----------------------------------------------

Tensor eval_conv(const Tensor& in, const Tensor& k, const Tensor& b, int stride, int pad) {
  Graph g;
  return ops::conv2d(g.input(in), g.input(k), g.input(b), stride, pad).value();
}

TEST(Conv2d, IdentityKernel) {
  const Tensor in(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(eval_conv(in, Tensor(Shape{1, 1, 1, 1}, 1.0), Tensor::vector({0}), 1, 0), in);
}

TEST(Conv2d, OnesKernel) {
  const Tensor out = eval_conv(Tensor(Shape{1, 1, 3, 3}, 1.0), Tensor(Shape{1, 1, 2, 2}, 1.0),
                               Tensor::vector({0}), 1, 0);
  EXPECT_EQ(out, Tensor(Shape{1, 1, 2, 2}, 4.0));
}

TEST(Conv2d, BiasOnly) {
  Rng rng(1);
  const Tensor out = eval_conv(random_tensor(rng, {2, 3, 4, 4}), Tensor(Shape{2, 3, 3, 3}),
                               Tensor::vector({5, 5}), 1, 1);
  EXPECT_EQ(out, Tensor(Shape{2, 2, 4, 4}, 5.0));
}

TEST(Conv2d, CrossCorrelationWithPaddingAndStride) {
  // 3x3 input 1..9, pad 1, stride 2 -> 2x2 output per kernel.
  // Channel 0 sums 3x3 windows; channel 1 computes in(r-1, c-1) - in(r+1, c+1)
  // at r = 2*oy, c = 2*ox, which pins the orientation (no kernel flip).
  const Tensor in(Shape{1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k(Shape{2, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) k[i] = 1.0;
  k.at({1, 0, 0, 0}) = 1.0;
  k.at({1, 0, 2, 2}) = -1.0;
  const Tensor out = eval_conv(in, k, Tensor::vector({0, 0}), 2, 1);
  EXPECT_EQ(out, Tensor(Shape{1, 2, 2, 2}, {12, 16, 24, 28, -5, 0, 0, 5}));
}

TEST(Conv2d, Errors) {
  const Tensor in(Shape{1, 2, 4, 4});
  EXPECT_THROW(eval_conv(in, Tensor(Shape{1, 3, 3, 3}), Tensor::vector({0}), 1, 1), DimensionError);
  EXPECT_THROW(eval_conv(in, Tensor(Shape{1, 2, 3, 3}), Tensor::vector({0, 0}), 1, 1), DimensionError);
  EXPECT_THROW(eval_conv(in, Tensor(Shape{1, 2, 7, 7}), Tensor::vector({0}), 1, 1), DimensionError);
  EXPECT_THROW(eval_conv(in, Tensor(Shape{1, 2, 3, 3}), Tensor::vector({0}), 2, 0), ConfigError);
  EXPECT_THROW(eval_conv(in, Tensor(Shape{1, 2, 3, 3}), Tensor::vector({0}), 0, 1), ConfigError);
}

TEST(Relu, Values) {
  Graph g;
  Var x = g.input(Tensor::vector({-1, 0, 2}));
  Var y = ops::relu(x);
  EXPECT_EQ(y.value(), Tensor::vector({0, 0, 2}));
  g.backward(y, Tensor::vector({1, 1, 1}));
  EXPECT_EQ(x.grad(), Tensor::vector({0, 0, 1}));

  Graph g2;
  Var neg = g2.input(Tensor::vector({-3, -0.5}));
  Var y2 = ops::relu(neg);
  EXPECT_EQ(y2.value(), Tensor::vector({0, 0}));
  g2.backward(y2, Tensor::vector({1, 1}));
  EXPECT_EQ(neg.grad(), Tensor::vector({0, 0}));

  Graph g3;
  Var three = g3.input(Tensor::scalar(3.0));
  g3.backward(ops::relu(three), Tensor::scalar(1.0));
  EXPECT_EQ(three.grad()[0], 1.0);
}

TEST(AvgPool, Values) {
  Graph g;
  EXPECT_EQ(ops::avg_pool2d(g.input(Tensor(Shape{1, 1, 2, 2}, {1, 3, 5, 7})), 2).value(),
            Tensor(Shape{1, 1, 1, 1}, 4.0));
  EXPECT_EQ(ops::avg_pool2d(g.input(Tensor(Shape{1, 2, 4, 4}, 2.5)), 2).value(), Tensor(Shape{1, 2, 2, 2}, 2.5));
  Rng rng(2);
  const Tensor t = random_tensor(rng, {2, 1, 3, 3});
  EXPECT_EQ(ops::avg_pool2d(g.input(t), 1).value(), t);
  EXPECT_THROW(ops::avg_pool2d(g.input(Tensor(Shape{1, 1, 3, 3})), 2), ConfigError);
}

TEST(AvgPool, BackwardSpreadsUniformly) {
  Graph g;
  Var x = g.input(Tensor(Shape{1, 1, 2, 2}, {1, 3, 5, 7}));
  g.backward(ops::avg_pool2d(x, 2), Tensor(Shape{1, 1, 1, 1}, 1.0));
  EXPECT_EQ(x.grad(), Tensor(Shape{1, 1, 2, 2}, 0.25));
}

TEST(Dense, Values) {
  Graph g;
  EXPECT_EQ(ops::dense(g.input(Tensor::matrix({{3, 4}})), g.input(Tensor::matrix({{1, 2}})),
                       g.input(Tensor::vector({1})))
                .value(),
            Tensor::matrix({{12}}));
  EXPECT_EQ(ops::dense(g.input(Tensor::matrix({{3, 4}})), g.input(Tensor::matrix({{0, 0}})),
                       g.input(Tensor::vector({-2})))
                .value(),
            Tensor::matrix({{-2}}));
  EXPECT_EQ(ops::dense(g.input(Tensor::matrix({{7}, {-1}})), g.input(Tensor::matrix({{1}})),
                       g.input(Tensor::vector({0})))
                .value(),
            Tensor::matrix({{7}, {-1}}));
  EXPECT_THROW(ops::dense(g.input(Tensor::matrix({{3, 4}})), g.input(Tensor::matrix({{1, 2, 3}})),
                          g.input(Tensor::vector({1}))),
               DimensionError);
}

TEST(Logistic, Values) {
  EXPECT_EQ(ops::logistic(0.0), 0.5);
  EXPECT_NEAR(ops::logistic(100.0), 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(ops::logistic(-800.0)));
  EXPECT_GE(ops::logistic(-800.0), 0.0);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double z = rng.uniform(-20, 20);
    EXPECT_NEAR(ops::logistic(-z), 1.0 - ops::logistic(z), 1e-15);
    EXPECT_LT(ops::logistic(z), ops::logistic(z + 0.01));
  }
  Graph g;
  const Tensor y = ops::logistic(g.input(Tensor::vector({0, 2, -2}))).value();
  EXPECT_EQ(y[0], 0.5);
  EXPECT_EQ(y[1], ops::logistic(2.0));
}

TEST(GlobalAvgPool, Values) {
  Graph g;
  const Tensor in(Shape{1, 2, 2, 2}, {1, 2, 3, 4, 0, 0, 0, 8});
  EXPECT_EQ(ops::global_avg_pool(g.input(in)).value(), Tensor::matrix({{2.5, 2.0}}));
}

// --- upsampling --------------------------------------------------------------

TEST(Upsample, ConstantAndSinglePixel) {
  const Tensor c(Shape{3, 5}, 0.7);
  EXPECT_EQ(ops::upsample_bilinear(c, 12, 7), Tensor(Shape{12, 7}, 0.7));
  EXPECT_EQ(ops::upsample_bilinear(Tensor(Shape{1, 1}, -2.0), 4, 9), Tensor(Shape{4, 9}, -2.0));
}

TEST(Upsample, SameSizeIsBitwiseCopy) {
  Rng rng(8);
  const Tensor m = random_tensor(rng, {6, 4});
  EXPECT_EQ(ops::upsample_bilinear(m, 6, 4), m);
}

TEST(Upsample, HalfPixelCentres) {
  // 1x2 -> 1x4. Output x centres map to source x = (i + 0.5) / 2 - 0.5:
  // -0.25 (clamped to 0), 0.25, 0.75, 1.25 (clamped to 1).
  const Tensor out = ops::upsample_bilinear(Tensor::matrix({{0, 4}}), 1, 4);
  EXPECT_EQ(out, Tensor::matrix({{0, 1, 3, 4}}));
}

TEST(Upsample, StaysWithinRange) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Tensor m = random_tensor(rng, {1 + rng.below(5), 1 + rng.below(5)});
    const Tensor up = ops::upsample_bilinear(m, 1 + rng.below(20), 1 + rng.below(20));
    EXPECT_GE(up.min(), m.min());
    EXPECT_LE(up.max(), m.max());
  }
}

TEST(Upsample, Errors) {
  EXPECT_THROW(ops::upsample_bilinear(Tensor(Shape{2, 2}), 0, 3), ConfigError);
  EXPECT_THROW(ops::upsample_bilinear(Tensor(Shape{2, 2, 2}), 3, 3), DimensionError);
}

}  // namespace
}  // namespace attrcam
