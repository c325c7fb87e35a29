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

#include "centerpercept/synth.hpp"

#include <algorithm>
#include <cmath>

namespace centerpercept {

int SceneRng::uniform_int(int lo, int hi) {
  if (hi < lo) throw InvalidArgument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

std::string SceneConfig::validate() const {
  if (image_w <= 0 || image_h <= 0) return "image dims must be positive";
  if (stride <= 0 || image_w % stride || image_h % stride) return "stride must divide image dims";
  if (n_boxes_min < 0 || n_boxes_max < n_boxes_min) return "empty box count range";
  if (n_lanes_min < 0 || n_lanes_max < n_lanes_min) return "empty lane count range";
  if (!(box_size_min > 0) || box_size_max < box_size_min) return "empty box size range";
  if (box_size_max > std::min(image_w, image_h)) return "box size larger than image";
  if (min_center_separation < 0) return "center separation must be >= 0";
  if (lane_degree_min < 1 || lane_degree_max < lane_degree_min || lane_degree_max > 5) {
    return "lane degree range must lie in [1, 5]";
  }
  if (!(lane_max_slope > 0)) return "lane slope must be positive";
  if (midpoint_separation < 0) return "midpoint separation must be >= 0";
  if (!(lane_pace > 0)) return "lane pace must be positive";
  if (max_retries <= 0) return "max_retries must be positive";
  return {};
}

namespace {

// Coefficients (ascending) of the interpolating polynomial through (ys, xs).
std::vector<double> interpolate(const std::vector<double>& ys, const std::vector<double>& xs) {
  const std::size_t n = ys.size();
  std::vector<double> coeffs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> basis{1.0};
    double denom = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<double> next(basis.size() + 1, 0.0);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        next[k + 1] += basis[k];
        next[k] -= basis[k] * ys[j];
      }
      basis = std::move(next);
      denom *= ys[i] - ys[j];
    }
    for (std::size_t k = 0; k < n; ++k) coeffs[k] += xs[i] * basis[k] / denom;
  }
  return coeffs;
}

double eval(const std::vector<double>& c, double y) {
  double x = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) x = x * y + *it;
  return x;
}

bool try_lane(SceneRng& rng, const SceneConfig& cfg, int class_id, LaneInstance& lane,
              Scene::LaneCurve& curve) {
  const double h = cfg.image_h, w = cfg.image_w;
  const int degree = rng.uniform_int(cfg.lane_degree_min, cfg.lane_degree_max);
  const double y_min = rng.uniform(0.1 * h, 0.45 * h);
  const double y_max = rng.uniform(std::min(h, y_min + 0.4 * h), h);
  std::vector<double> ys(static_cast<std::size_t>(degree) + 1), xs(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = y_min + (y_max - y_min) * i / degree;
  xs[0] = rng.uniform(0.05 * w, 0.95 * w);
  const double slope = rng.uniform(-cfg.lane_max_slope, cfg.lane_max_slope) * 0.7;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double dy = ys[i] - ys[i - 1];
    const double local = std::clamp(slope + rng.uniform(-0.3, 0.3), -cfg.lane_max_slope, cfg.lane_max_slope);
    xs[i] = xs[i - 1] + local * dy;
  }
  curve.coefficients = interpolate(ys, xs);
  curve.y_min = y_min;
  curve.y_max = y_max;

  lane.class_id = class_id;
  lane.points.clear();
  constexpr double kStep = 2.0;
  for (double y = y_min;; y += kStep) {
    const double yy = std::min(y, y_max);
    const double x = eval(curve.coefficients, yy);
    if (!(x >= 0.0 && x <= w)) return false;
    if (lane.points.size() >= 1) {
      const auto& prev = lane.points.back();
      if (std::abs(x - prev.x) > cfg.lane_max_slope * (yy - prev.y) * 1.5 + 1e-9) return false;
    }
    lane.points.push_back({x, yy});
    if (yy >= y_max) break;
  }
  return lane.points.size() >= 2;
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg) {
  if (const auto err = cfg.validate(); !err.empty()) throw InvalidArgument("scene config: " + err);
  const GridSpec grid(cfg.image_w, cfg.image_h, cfg.stride);
  SceneRng rng(cfg.seed);
  Scene scene;
  scene.name = "synth_" + std::to_string(cfg.seed);
  scene.width = cfg.image_w;
  scene.height = cfg.image_h;
  scene.tags = {rng.uniform_int(0, kNumWeather - 1), rng.uniform_int(0, kNumScene - 1),
                rng.uniform_int(0, kNumTimeOfDay - 1)};

  const int n_boxes = rng.uniform_int(cfg.n_boxes_min, cfg.n_boxes_max);
  std::vector<Cell> centers;
  for (int b = 0; b < n_boxes; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      BoundingBoxAnn box;
      const double bw = rng.uniform(cfg.box_size_min, cfg.box_size_max);
      const double bh = rng.uniform(cfg.box_size_min, cfg.box_size_max);
      box.x1 = rng.uniform(0.0, cfg.image_w - bw);
      box.y1 = rng.uniform(0.0, cfg.image_h - bh);
      box.x2 = box.x1 + bw;
      box.y2 = box.y1 + bh;
      box.class_id = rng.uniform_int(0, kNumDetClasses - 1);
      box.occluded = rng.bernoulli(0.5);
      const Cell c = box_center_cell(box, grid);
      const bool clear = std::all_of(centers.begin(), centers.end(), [&](const Cell& o) {
        return std::max(std::abs(o.x - c.x), std::abs(o.y - c.y)) >= cfg.min_center_separation;
      });
      if (clear) {
        centers.push_back(c);
        scene.boxes.push_back(box);
        placed = true;
      }
    }
    if (!placed) {
      throw GenerationError("could not place box " + std::to_string(b) + " with center separation " +
                            std::to_string(cfg.min_center_separation));
    }
  }

  const int n_lanes = rng.uniform_int(cfg.n_lanes_min, cfg.n_lanes_max);
  std::vector<Point2> midpoints;
  for (int l = 0; l < n_lanes; ++l) {
    bool placed = false;
    const int class_id = rng.uniform_int(0, kNumLaneClasses - 1);
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      LaneInstance lane;
      Scene::LaneCurve curve;
      if (!try_lane(rng, cfg, class_id, lane, curve)) continue;
      const auto kps = lane_keypoints(lane, grid, cfg.lane_pace);
      if (kps.size() < 2) continue;
      const Cell mid = kps[lane_midpoint_index(kps.size())];
      const Point2 m{static_cast<double>(mid.x), static_cast<double>(mid.y)};
      const bool clear = std::all_of(midpoints.begin(), midpoints.end(), [&](const Point2& o) {
        return std::hypot(o.x - m.x, o.y - m.y) >= cfg.midpoint_separation;
      });
      if (!clear) continue;
      midpoints.push_back(m);
      scene.lanes.push_back(std::move(lane));
      scene.lane_curves.push_back(std::move(curve));
      placed = true;
    }
    if (!placed) {
      throw GenerationError("could not place lane " + std::to_string(l) + " with midpoint separation " +
                            std::to_string(cfg.midpoint_separation));
    }
  }
  return scene;
}

std::vector<Scene> generate_scenes(const SceneConfig& cfg, std::size_t count) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneConfig c = cfg;
    c.seed = cfg.seed + i;
    out.push_back(generate_scene(c));
  }
  return out;
}

TargetBundle ideal_outputs(const Scene& scene, const GridSpec& grid, const EncoderConfig& cfg) {
  return encode_targets(scene.boxes, scene.lanes, grid, cfg);
}

}  // namespace centerpercept
