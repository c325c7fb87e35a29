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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "centerpercept/constants.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept {

double iou_box(const BoundingBoxAnn& a, const BoundingBoxAnn& b);

// ---------------------------------------------------------------------------
// Average precision

/// One ranked prediction after matching within its image.
struct ScoredHit {
  double score = 0.0;
  bool true_positive = false;
};

/// All-point interpolated AP of a ranked hit list against n_gt ground truths.
/// Hits are ordered by descending score; among equal scores false positives
/// come first, so the result does not depend on input order.
double all_point_ap(std::vector<ScoredHit> hits, std::size_t n_gt);

/// Greedy per-image matching: predictions in descending score order (stable)
/// each take the unmatched ground truth with the highest IoU >= iou_thresh.
/// Returns the TP flag of every prediction, in input order. Classes are not
/// checked; callers pass single-class lists.
std::vector<bool> greedy_match(std::span<const BoundingBoxAnn> preds,
                               std::span<const BoundingBoxAnn> gts, double iou_thresh);

struct ApResult {
  std::array<std::optional<double>, kNumDetClasses> per_class{};
  double map = 0.0;
  std::size_t classes_with_gt = 0;
};

/// Per-image accumulation of ranked hits; merge() is associative and
/// commutative, so images can be processed in any order or in parallel.
class ApAccumulator {
 public:
  explicit ApAccumulator(double iou_thresh = defaults::kMatchIou) : iou_thresh_(iou_thresh) {}

  void add_image(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts);
  void merge(const ApAccumulator& other);
  ApResult result() const;

 private:
  double iou_thresh_;
  std::array<std::vector<ScoredHit>, kNumDetClasses> hits_{};
  std::array<std::size_t, kNumDetClasses> n_gt_{};
};

/// Single-image convenience wrapper around ApAccumulator.
ApResult average_precision(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts,
                           double iou_thresh = defaults::kMatchIou);

// ---------------------------------------------------------------------------
// Minimum-weight matching and occlusion accuracy

/// Optimal assignment for a rows x cols cost matrix (Hungarian algorithm).
/// Matches min(rows, cols) pairs, returned as (row, col) sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> min_cost_assignment(
    const std::vector<std::vector<double>>& cost);

struct BoxMatch {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

/// Assignment minimising sum(1 - IoU); pairs below iou_floor are then
/// dropped. Class-agnostic.
std::vector<BoxMatch> match_min_weight(std::span<const BoundingBoxAnn> preds,
                                       std::span<const BoundingBoxAnn> gts,
                                       double iou_floor = defaults::kMatchIou);

struct OcclusionAccuracy {
  double accuracy = 1.0;  // 1.0 when nothing matched
  std::size_t matched = 0;
  std::size_t agreed = 0;
};

OcclusionAccuracy occlusion_accuracy(std::span<const BoxMatch> matches, const std::vector<bool>& pred_flags,
                                     const std::vector<bool>& gt_flags);

/// Matches per image and per class, then counts flag agreement.
class OcclusionAccumulator {
 public:
  explicit OcclusionAccumulator(double iou_floor = defaults::kMatchIou) : iou_floor_(iou_floor) {}
  void add_image(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts);
  void merge(const OcclusionAccumulator& other);
  OcclusionAccuracy result() const;

 private:
  double iou_floor_;
  std::size_t matched_ = 0;
  std::size_t agreed_ = 0;
};

// ---------------------------------------------------------------------------
// Lane masks

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Default brush width for an image: 8 px at 1280 px wide, scaled linearly,
/// at least 1.
int default_lane_width(int image_w);

/// Draws each polyline with a square brush of `line_width` pixels. A brush
/// centred at (px, py) covers integer pixels i with px - w/2 <= i < px + w/2
/// (same for y). Segments are sampled every 0.25 px. Class labels are
/// ignored.
BinaryMask rasterize_lanes(const std::vector<std::vector<Point2>>& polylines, int image_w, int image_h,
                           int line_width);

/// |a & b| / |a | b|; 1 when both are empty.
double lane_mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Dataset-level IoU: intersections and unions summed over frames.
class LaneIouAccumulator {
 public:
  void add_frame(const BinaryMask& pred, const BinaryMask& gt);
  void merge(const LaneIouAccumulator& other);
  double result() const;
  std::size_t frames() const { return frames_; }

 private:
  std::size_t intersection_ = 0;
  std::size_t union_ = 0;
  std::size_t frames_ = 0;
};

// ---------------------------------------------------------------------------
// Tagging

/// Macro F1 over classes that occur at least once in `gts`.
double f1_multiclass(std::span<const int> preds, std::span<const int> gts, int n_classes);

class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int n_classes);
  void add(int pred, int gt);
  void merge(const ConfusionAccumulator& other);
  double macro_f1() const;
  std::size_t samples() const { return samples_; }

 private:
  int n_;
  std::vector<std::size_t> counts_;  // n x n, row = gt, col = pred
  std::size_t samples_ = 0;
};

}  // namespace centerpercept
