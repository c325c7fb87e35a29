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

#include "centerpercept/types.hpp"

#include <algorithm>
#include <cmath>

namespace centerpercept {

GridSpec::GridSpec(int input_w, int input_h, int stride)
    : input_w_(input_w), input_h_(input_h), stride_(stride) {
  if (stride <= 0) throw InvalidArgument("stride must be positive");
  if (input_w <= 0 || input_h <= 0) throw InvalidArgument("input dims must be positive");
  if (input_w % stride != 0 || input_h % stride != 0) {
    throw InvalidArgument("stride " + std::to_string(stride) + " does not divide input " +
                          std::to_string(input_w) + "x" + std::to_string(input_h));
  }
}

Cell grid_point_to_cell(Point2 g, const GridSpec& grid) {
  // std::round is half-away-from-zero.
  const int gx = static_cast<int>(std::round(g.x));
  const int gy = static_cast<int>(std::round(g.y));
  return {std::clamp(gx, 0, grid.grid_w() - 1), std::clamp(gy, 0, grid.grid_h() - 1)};
}

Cell image_to_grid(Point2 p, const GridSpec& grid) {
  const double s = grid.stride();
  return grid_point_to_cell({p.x / s, p.y / s}, grid);
}

std::string validate_box(const BoundingBoxAnn& box, int image_w, int image_h) {
  if (!std::isfinite(box.x1) || !std::isfinite(box.y1) || !std::isfinite(box.x2) ||
      !std::isfinite(box.y2)) {
    return "non-finite box coordinate";
  }
  if (box.class_id < 0 || box.class_id >= kNumDetClasses) {
    return "class_id " + std::to_string(box.class_id) + " out of range";
  }
  if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) return "degenerate box";
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > image_w || box.y2 > image_h) {
    return "box outside image bounds";
  }
  if (!(box.score >= 0.0 && box.score <= 1.0)) return "score outside [0,1]";
  return {};
}

std::string validate_lane(const LaneInstance& lane, int image_w, int image_h) {
  if (lane.class_id < 0 || lane.class_id >= kNumLaneClasses) {
    return "lane class_id " + std::to_string(lane.class_id) + " out of range";
  }
  if (lane.points.size() < 2) return "lane needs at least 2 points";
  for (const auto& p : lane.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return "non-finite lane point";
    if (p.x < 0 || p.y < 0 || p.x > image_w || p.y > image_h) return "lane point outside image";
  }
  return {};
}

std::string validate_tags(const SceneTags& tags) {
  if (tags.weather < 0 || tags.weather >= kNumWeather) return "weather out of range";
  if (tags.scene < 0 || tags.scene >= kNumScene) return "scene out of range";
  if (tags.time_of_day < 0 || tags.time_of_day >= kNumTimeOfDay) return "time_of_day out of range";
  return {};
}

}  // namespace centerpercept
