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

struct GaussianSpec {
  Cell center;
  double sigma = 1.0;
};

struct EncoderConfig {
  double min_iou = defaults::kMinIou;
  double sigma_floor = defaults::kSigmaFloor;
  double lane_sigma = defaults::kLaneSigma;
  double lane_pace = defaults::kLanePace;
};

/// Heatmap of the element-wise maximum of isotropic Gaussians
/// exp(-d^2 / sigma^2), shape grid_h x grid_w. Each Gaussian is evaluated on
/// a window of radius ceil(3.75 sigma); beyond it every term is below 1e-6.
Tensor splat_gaussians(std::span<const GaussianSpec> keypoints, const GridSpec& grid);

/// Writes the same maximum into an existing grid_h x grid_w plane.
void splat_gaussians_into(std::span<float> plane, std::span<const GaussianSpec> keypoints,
                          const GridSpec& grid);

/// Largest corner displacement radius (grid cells) keeping IoU >= min_iou.
double corner_radius(double box_w, double box_h, int stride, double min_iou);

/// corner_radius / 3, floored at `sigma_floor`.
double corner_sigma(double box_w, double box_h, int stride, double min_iou,
                    double sigma_floor = defaults::kSigmaFloor);

struct DetectionTargets {
  Tensor heatmaps;   // 10 x H x W
  Tensor offsets;    // 4 x H x W: (cx - x1/S, cy - y1/S, cx - x2/S, cy - y2/S)
  Tensor occlusion;  // 1 x H x W
  Mask center_mask;
};

/// Rounded output-space center of a box.
Cell box_center_cell(const BoundingBoxAnn& box, const GridSpec& grid);

DetectionTargets encode_detections(std::span<const BoundingBoxAnn> boxes, const GridSpec& grid,
                                   const EncoderConfig& cfg = {});

/// Arc-length samples every `pace` units from the first point, plus the last
/// point. A polyline shorter than `pace` yields its two endpoints.
std::vector<Point2> resample_polyline(std::span<const Point2> points, double pace);

/// Exactly `count` (>= 2) samples evenly spaced in arc length.
std::vector<Point2> resample_polyline_count(std::span<const Point2> points, std::size_t count);

/// Flattens a piecewise cubic Bezier given as 3k+1 control points.
std::vector<Point2> flatten_cubic_bezier(std::span<const Point2> control,
                                         int samples_per_segment = 64);

/// Center line between the two edge annotations of one lane marking.
std::vector<Point2> merge_lane_edges(std::span<const Point2> edge_a, std::span<const Point2> edge_b,
                                     double pace = defaults::kLanePace);

/// Output-space keypoints of a lane: resampled every `pace` input pixels,
/// rounded onto the grid, consecutive duplicates removed.
std::vector<Cell> lane_keypoints(const LaneInstance& lane, const GridSpec& grid,
                                 double pace = defaults::kLanePace);

/// Midpoint keypoint index of an n-keypoint lane: floor(n / 2).
inline std::size_t lane_midpoint_index(std::size_t n) { return n / 2; }

struct LaneTargets {
  Tensor heatmaps;  // 8 x H x W
  Tensor offsets;   // 2 x H x W: midpoint - keypoint, grid cells
  Mask kp_mask;
};

LaneTargets encode_lanes(std::span<const LaneInstance> lanes, const GridSpec& grid,
                         const EncoderConfig& cfg = {});

struct TargetBundle {
  Tensor det_heatmaps;
  Tensor det_offsets;
  Tensor occlusion;
  Mask center_mask;
  Tensor lane_heatmaps;
  Tensor lane_offsets;
  Mask lane_kp_mask;
};

TargetBundle encode_targets(std::span<const BoundingBoxAnn> boxes,
                            std::span<const LaneInstance> lanes, const GridSpec& grid,
                            const EncoderConfig& cfg = {});

namespace ref {
// Serial full-map evaluation, no window truncation.
Tensor splat_gaussians(std::span<const GaussianSpec> keypoints, const GridSpec& grid);
}  // namespace ref

}  // namespace centerpercept
