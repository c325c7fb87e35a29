/*
 * Copyright 2026 The centerpercept Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "centerpercept/constants.hpp"
#include "centerpercept/losses.hpp"
#include "centerpercept/oracle.hpp"
#include "test_util.hpp"

namespace centerpercept {
namespace {

Tensor cell(float v) { return Tensor({1, 1}, v); }

TEST(WeightedL2, HandValues) {
  const HeatmapLossParams p{4.0, 2.0, 1.0};
  EXPECT_EQ(weighted_l2_loss(cell(1.0f), cell(0.0f), p), 16.0);
  EXPECT_EQ(weighted_l2_loss(cell(0.0f), cell(1.0f), p), 4.0);
  const Tensor h = testing::random_tensor({8, 8}, 1, 0.0f, 1.0f);
  EXPECT_EQ(weighted_l2_loss(h, h, p), 0.0);
}

TEST(WeightedL2, GradHandValues) {
  const HeatmapLossParams p{4.0, 2.0, 1.0};
  EXPECT_EQ(weighted_l2_grad(cell(1.0f), cell(0.0f), p)[0], -32.0f);
  const Tensor h = testing::random_tensor({8, 8}, 2, 0.0f, 1.0f);
  const Tensor g = weighted_l2_grad(h, h, p);
  for (float v : g.data()) ASSERT_EQ(v, 0.0f);
}

TEST(WeightedL2, ShapeMismatch) {
  EXPECT_THROW(weighted_l2_loss(Tensor({2, 2}), Tensor({2, 3})), InvalidArgument);
  EXPECT_THROW(weighted_l2_grad(Tensor({2, 2}), Tensor({2, 3})), InvalidArgument);
  EXPECT_THROW(weighted_l2_loss(Tensor({2, 2}), Tensor({2, 2}), {4.0, 2.0, 0.5}), InvalidArgument);
}

TEST(WeightedL2, BoundsAndZeroIffEqual) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [h, hp] = oracle::random_loss_case(seed, 16, 16);
    const double n_k = count_target_peaks(h);
    const HeatmapLossParams p{4.0, 2.0, n_k};
    const double loss = weighted_l2_loss(h, hp, p);
    double mse = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) mse += (h[i] - hp[i]) * (h[i] - hp[i]);
    ASSERT_GT(loss, 0.0);
    ASSERT_GE(loss, mse / n_k * (1.0 - 1e-12));
  }
}

TEST(WeightedL2, ParallelMatchesSerial) {
  const auto [h, hp] = oracle::random_loss_case(99, 80, 160);
  EXPECT_NEAR(weighted_l2_loss(h, hp), ref::weighted_l2_loss(h, hp), 1e-9 * ref::weighted_l2_loss(h, hp));
  EXPECT_EQ(weighted_l2_grad(h, hp), ref::weighted_l2_grad(h, hp));
}

TEST(WeightedL2, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [h, hp] = oracle::random_loss_case(seed, 32, 32);
    const HeatmapLossParams p{4.0, 2.0, count_target_peaks(h)};
    const auto r = oracle::check_loss_gradient(h, hp, p, 1e-3);
    ASSERT_LT(r.rel_error, 1e-3) << seed;
    ASSERT_GT(r.checked, 900u);
  }
}

TEST(WeightedL2, PredictionBranchGradient) {
  // H = 0, Hp = 0.9: (1+Hp)^2 = 3.61 > 1, prediction weight active.
  const HeatmapLossParams p{4.0, 2.0, 1.0};
  const double d = -0.9;
  const double want = 2.0 * 1.9 * d * d - 2.0 * 1.9 * 1.9 * d;
  EXPECT_NEAR(weighted_l2_grad(cell(0.0f), cell(0.9f), p)[0], want, 1e-5);
}

TEST(CountTargetPeaks, FlooredAtOne) {
  EXPECT_EQ(count_target_peaks(Tensor({4, 4})), 1.0);
  Tensor t({4, 4});
  t[3] = t[7] = t[9] = 1.0f;
  EXPECT_EQ(count_target_peaks(t), 3.0);
}

TEST(OffsetL1, Examples) {
  Mask m(2, 3);
  const Tensor zeros = Tensor::chw(4, 2, 3);
  EXPECT_EQ(offset_l1_loss(zeros, zeros, m), 0.0);
  Tensor pred = zeros;
  pred.at(0, 1, 2) = 1;
  pred.at(1, 1, 2) = 2;
  pred.at(2, 1, 2) = 3;
  pred.at(3, 1, 2) = -4;
  pred.at(0, 0, 0) = 100;  // unmasked
  EXPECT_EQ(offset_l1_loss(pred, zeros, m), 0.0);
  m.set(1, 2);
  EXPECT_DOUBLE_EQ(offset_l1_loss(pred, zeros, m), 2.5);
  EXPECT_EQ(offset_l1_loss(pred, pred, m), 0.0);
  EXPECT_THROW(offset_l1_loss(pred, Tensor::chw(2, 2, 3), m), InvalidArgument);
}

TEST(CrossEntropy, UniformAndShiftInvariant) {
  const std::vector<float> uniform(7, 0.3f);
  EXPECT_NEAR(cross_entropy(uniform, 4), std::log(7.0), 1e-9);
  EXPECT_NEAR(cross_entropy(uniform, 4), 1.94591, 1e-5);
  const std::vector<float> z{0.5f, -1.0f, 2.0f, 0.0f};
  std::vector<float> shifted = z;
  for (float& v : shifted) v += 17.0f;
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(cross_entropy(z, k), cross_entropy(shifted, k), 1e-6);
  EXPECT_THROW(cross_entropy(z, 4), InvalidArgument);
  EXPECT_THROW(cross_entropy(z, -1), InvalidArgument);
}

TEST(Sigmoid, HeatmapBiasInit) {
  EXPECT_NEAR(sigmoid(defaults::kHeatmapBiasInit), 0.990, 5e-4);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
}

TEST(OcclusionBce, Examples) {
  const Tensor logits = Tensor::chw(1, 4, 4, 0.0f);
  EXPECT_EQ(occlusion_bce(logits, {}, {}), 0.0);
  const std::vector<Cell> centers{{1, 1}, {2, 3}};
  EXPECT_NEAR(occlusion_bce(logits, centers, {true, false}), std::log(2.0), 1e-12);
  Tensor l2 = logits;
  l2.at(0, 1, 1) = 3.0f;
  const double want = (-std::log(sigmoid(3.0)) - std::log(1.0 - 0.5)) / 2.0;
  EXPECT_NEAR(occlusion_bce(l2, centers, {true, false}), want, 1e-9);
  EXPECT_THROW(occlusion_bce(logits, centers, {true}), InvalidArgument);
}

}  // namespace
}  // namespace centerpercept
