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

// Brute-force reference computations used by the property and acceptance
// tests. Nothing here calls into the routines it is used to check.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "centerpercept/losses.hpp"
#include "centerpercept/metrics.hpp"
#include "centerpercept/neckops.hpp"
#include "centerpercept/tensor.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept::oracle {

/// Cells >= threshold not exceeded by any in-grid 3x3 neighbour, in (y, x)
/// order.
std::vector<Cell> peaks_exhaustive(std::span<const float> plane, std::size_t height, std::size_t width,
                                   double threshold);

/// Minimum total cost over every injective row->column (or column->row)
/// assignment of size min(rows, cols).
double assignment_bruteforce(const std::vector<std::vector<double>>& cost);

/// Total cost of greedy assignment (repeatedly take the cheapest remaining
/// cell of the matrix).
double assignment_greedy(const std::vector<std::vector<double>>& cost);

/// Per-class AP from the explicit precision/recall curve: every prefix of
/// the ranked list is matched from scratch, and the interpolated precision
/// at recall r is the max precision over all prefixes reaching r.
/// Returns mAP over classes with ground truth; per_class gets -1 for
/// classes without ground truth.
double ap_exhaustive(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts,
                     double iou_thresh, std::vector<double>* per_class = nullptr);

/// Ward clustering by explicit partition search: from singletons, repeatedly
/// evaluate every partition obtained by merging two clusters, recomputing the
/// total within-cluster sum of squares from scratch, and keep the smallest.
/// The merge linkage is sqrt(2 * increase); stop once it exceeds the
/// threshold. Returns labels in the same canonical order as the library.
std::vector<int> ward_partition_search(std::span<const Point2> votes, double dist_threshold);

/// Mask built by testing every pixel: pixel (i, j) is set when some segment
/// meets the box (i - w/2, i + w/2] x (j - w/2, j + w/2].
BinaryMask lane_mask_enumerate(const std::vector<std::vector<Point2>>& polylines, int image_w,
                               int image_h, int line_width);

/// Central differences of the weighted L2 loss, evaluated in double.
std::vector<double> loss_finite_difference(const Tensor& target, const Tensor& pred,
                                           const HeatmapLossParams& params, double h);

/// True where the active weight branch differs between pred - h and
/// pred + h, or the two weights are within `tie_eps`.
std::vector<bool> loss_tie_cells(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params,
                                 double h, double tie_eps = 1e-6);

struct GradientCheck {
  double loss = 0.0;
  double rel_error = 0.0;      // ||g - fd|| / ||fd|| over non-tie cells
  double max_abs_error = 0.0;  // over non-tie cells
  std::size_t checked = 0;
  std::size_t ties = 0;
};

/// Compares the library gradient with central differences, skipping tie
/// cells as defined by loss_tie_cells.
GradientCheck check_loss_gradient(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params,
                                  double h = 1e-3);

/// Random target/prediction pair in [0, 1] for a seed; about 2% of target
/// cells are exact peaks (1.0).
std::pair<Tensor, Tensor> random_loss_case(std::uint64_t seed, std::size_t height, std::size_t width);

/// Convolution as a scatter from every input pixel to the outputs it feeds.
Tensor conv2d_scatter(const Tensor& input, const ConvParams& params);

/// Transposed convolution as zero-stuffing + padding + convolution with the
/// flipped, channel-swapped kernel.
Tensor transposed_conv_zero_stuffing(const Tensor& input, const ConvParams& params);

/// Closed-form bilinear upsampling by `factor` (half-pixel centres, no
/// corner alignment). Border pixels use edge clamping.
Tensor bilinear_upsample(const Tensor& input, int factor);

Tensor maxpool_window_scan(const Tensor& input, int kernel, int stride);

/// BiFPN recomputed directly from the recurrences with upsample_nearest,
/// maxpool and the serial reference convolution.
std::vector<Tensor> bifpn_two_pass(const std::vector<Tensor>& pyramid, const BifpnParams& params);

/// Binary search for the largest radius r (grid cells) such that every
/// displacement of each box corner by -r, 0 or +r along each axis keeps
/// IoU >= min_iou.
double corner_radius_search(double box_w, double box_h, int stride, double min_iou);

}  // namespace centerpercept::oracle
