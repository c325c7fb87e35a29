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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace centerpercept {

inline constexpr int kNumDetClasses = 10;
inline constexpr int kNumLaneClasses = 8;
inline constexpr int kNumWeather = 7;
inline constexpr int kNumScene = 7;
inline constexpr int kNumTimeOfDay = 4;

// Bad inputs to any public operation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Least-squares fit without enough distinct abscissae.
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Integer cell on the output grid.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Input geometry plus output stride. Grid dims are derived, never stored
/// independently, so they cannot drift from the input size.
class GridSpec {
 public:
  /// Throws InvalidArgument unless stride > 0 divides both input dims.
  GridSpec(int input_w, int input_h, int stride);

  int input_w() const { return input_w_; }
  int input_h() const { return input_h_; }
  int stride() const { return stride_; }
  int grid_w() const { return input_w_ / stride_; }
  int grid_h() const { return input_h_ / stride_; }
  std::size_t cells() const {
    return static_cast<std::size_t>(grid_w()) * static_cast<std::size_t>(grid_h());
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int input_w_;
  int input_h_;
  int stride_;
};

struct BoundingBoxAnn {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  int class_id = 0;
  bool occluded = false;
  double score = 1.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Point2 center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }
};

struct LaneInstance {
  int class_id = 0;
  std::vector<Point2> points;
};

struct SceneTags {
  int weather = 0;
  int scene = 0;
  int time_of_day = 0;

  friend bool operator==(const SceneTags&, const SceneTags&) = default;
};

using Detections = std::vector<BoundingBoxAnn>;
using LaneSet = std::vector<LaneInstance>;

/// Rounds an image-space point onto the output grid. Ties round away from
/// zero; cells past the last row/column are clamped back into the grid.
Cell image_to_grid(Point2 p, const GridSpec& grid);

/// Same mapping for a point already expressed in (fractional) grid units.
Cell grid_point_to_cell(Point2 g, const GridSpec& grid);

// Type-invariant checks. Each returns an empty string when valid.
std::string validate_box(const BoundingBoxAnn& box, int image_w, int image_h);
std::string validate_lane(const LaneInstance& lane, int image_w, int image_h);
std::string validate_tags(const SceneTags& tags);

}  // namespace centerpercept
