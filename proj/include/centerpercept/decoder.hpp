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

#include <optional>
#include <span>
#include <vector>

#include "centerpercept/constants.hpp"
#include "centerpercept/tensor.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept {

struct Peak {
  Cell cell;
  float score = 0.0f;

  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Cells >= threshold that are >= each in-grid 8-neighbour. Plateau cells
/// are all kept. Sorted by descending score, then row, then column.
std::vector<Peak> extract_peaks(std::span<const float> plane, std::size_t height, std::size_t width,
                                double threshold);
std::vector<Peak> extract_peaks(const Tensor& heatmap, double threshold);

struct BoxDecodeConfig {
  double threshold = defaults::kDetThreshold;
  double occl_threshold = defaults::kOcclusionThreshold;
};

/// Boxes from per-class center heatmaps, the shared 4-channel corner offsets
/// and the occlusion map. Inputs are probabilities, not logits. Output is
/// grouped by class, descending score within a class.
Detections decode_boxes(const Tensor& det_heatmaps, const Tensor& det_offsets,
                        const Tensor& occlusion, const GridSpec& grid,
                        const BoxDecodeConfig& cfg = {});

/// Ward agglomerative clustering of `votes`. Merging continues while the
/// smallest Ward linkage is <= dist_threshold. Labels are 0..k-1 ordered by
/// cluster size (descending), ties by smallest member index.
std::vector<int> cluster_by_midpoint(std::span<const Point2> keypoints, std::span<const Point2> votes,
                                     double dist_threshold);

/// One merge of the Ward hierarchy; `a` and `b` are the smallest member
/// indices of the two merged clusters.
struct WardMerge {
  std::size_t a = 0;
  std::size_t b = 0;
  double distance = 0.0;
};

/// Full Ward hierarchy (n - 1 merges, ascending distance) via the
/// nearest-neighbour chain algorithm with Lance-Williams updates.
std::vector<WardMerge> ward_hierarchy(std::span<const Point2> points);

/// x = sum_i coefficients[i] * y^i, valid on [y_min, y_max].
struct LanePolynomial {
  int class_id = 0;
  std::vector<double> coefficients;
  double y_min = 0.0;
  double y_max = 0.0;
  /// Index of the lane in the decoded LaneSet this curve was fit to.
  std::size_t lane_index = 0;

  double operator()(double y) const;
  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

/// Least-squares x = f(y). The degree is reduced to (distinct y count - 1)
/// when there are too few points. Throws DegenerateFit if every y is equal.
LanePolynomial fit_polynomial(std::span<const Point2> points, int degree);

struct LaneDecodeConfig {
  double threshold = defaults::kDetThreshold;
  double dist_threshold = defaults::kClusterDistance;
  int poly_degree = defaults::kPolyDegree;
};

struct LaneDecodeResult {
  LaneSet lanes;  // image-space keypoints, sorted by y
  std::vector<LanePolynomial> polynomials;
};

LaneDecodeResult decode_lanes(const Tensor& lane_heatmaps, const Tensor& lane_offsets,
                              const GridSpec& grid, const LaneDecodeConfig& cfg = {});

/// Image-space polyline of a fitted lane, one vertex per `step` pixels of y.
std::vector<Point2> sample_polynomial(const LanePolynomial& poly, double step = 1.0);

namespace ref {
std::vector<Peak> extract_peaks(std::span<const float> plane, std::size_t height, std::size_t width,
                                double threshold);
}  // namespace ref

}  // namespace centerpercept
