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

#pragma once

#include <span>
#include <vector>

#include "centerpercept/constants.hpp"
#include "centerpercept/tensor.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept {

struct HeatmapLossParams {
  double alpha = defaults::kHeatmapAlpha;  // target exponent
  double beta = defaults::kHeatmapBeta;    // prediction exponent
  double n_k = 1.0;                        // normalizer, >= 1
};

/// Normalizer for a target heatmap: the number of cells equal to 1 (the
/// splatted peaks), floored at 1.
double count_target_peaks(const Tensor& target);

/// (1 / n_k) * sum max{(1 + H)^alpha, (1 + Hp)^beta} * (H - Hp)^2
double weighted_l2_loss(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params = {});

/// d loss / d pred. Where the target weight is active (ties included) the
/// weight is constant in Hp; otherwise the derivative of the prediction
/// weight is included.
Tensor weighted_l2_grad(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params = {});

/// Mean |pred - target| over all channels at masked cells; 0 for an empty
/// mask. Tensors are C x H x W, the mask H x W.
double offset_l1_loss(const Tensor& pred, const Tensor& target, const Mask& mask);

/// Softmax cross-entropy of one logit vector against `label`.
double cross_entropy(std::span<const float> logits, int label);

double sigmoid(double x);

/// Mean binary cross-entropy of sigmoid(logit) read at each center against
/// its occlusion flag. 0 when there are no objects.
double occlusion_bce(const Tensor& occl_logits, std::span<const Cell> centers,
                     const std::vector<bool>& flags);

namespace ref {
double weighted_l2_loss(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params = {});
Tensor weighted_l2_grad(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params = {});
}  // namespace ref

}  // namespace centerpercept
