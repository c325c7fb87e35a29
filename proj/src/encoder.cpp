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

#include "centerpercept/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace centerpercept {
namespace {

constexpr double kWindowSigmas = 3.75;

void check_sigmas(std::span<const GaussianSpec> keypoints) {
  for (const auto& k : keypoints) {
    if (!(k.sigma > 0.0) || !std::isfinite(k.sigma)) {
      throw InvalidArgument("gaussian sigma must be positive, got " + std::to_string(k.sigma));
    }
  }
}

void check_plane(std::span<float> plane, const GridSpec& grid) {
  if (plane.size() != grid.cells()) throw InvalidArgument("heatmap plane does not match grid");
}

double polyline_length(std::span<const Point2> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  return len;
}

// Point at arc length `s` along the polyline; `seg` and `seg_start` carry the
// walk state between monotonically increasing queries.
Point2 point_at(std::span<const Point2> pts, double s, std::size_t& seg, double& seg_start) {
  while (seg + 1 < pts.size()) {
    const double l = std::hypot(pts[seg + 1].x - pts[seg].x, pts[seg + 1].y - pts[seg].y);
    if (s <= seg_start + l || seg + 2 == pts.size()) {
      const double t = l > 0.0 ? std::clamp((s - seg_start) / l, 0.0, 1.0) : 0.0;
      return {pts[seg].x + t * (pts[seg + 1].x - pts[seg].x),
              pts[seg].y + t * (pts[seg + 1].y - pts[seg].y)};
    }
    seg_start += l;
    ++seg;
  }
  return pts.back();
}

void check_polyline(std::span<const Point2> points) {
  if (points.size() < 2) throw InvalidArgument("polyline needs at least 2 points");
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("non-finite polyline point");
  }
}

std::vector<Point2> oriented_by_y(std::vector<Point2> pts) {
  if (pts.front().y > pts.back().y) std::reverse(pts.begin(), pts.end());
  return pts;
}

}  // namespace

void splat_gaussians_into(std::span<float> plane, std::span<const GaussianSpec> keypoints,
                          const GridSpec& grid) {
  check_sigmas(keypoints);
  check_plane(plane, grid);
  const int w = grid.grid_w();
  const int h = grid.grid_h();
  for (const auto& k : keypoints) {
    if (k.center.x < 0 || k.center.x >= w || k.center.y < 0 || k.center.y >= h) {
      throw InvalidArgument("gaussian center outside grid");
    }
  }
  // Rows are independent; the max is order-free so the result does not
  // depend on the thread count.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    float* row = plane.data() + static_cast<std::size_t>(y) * w;
    for (const auto& k : keypoints) {
      const int r = static_cast<int>(std::ceil(kWindowSigmas * k.sigma));
      const int dy = y - k.center.y;
      if (dy < -r || dy > r) continue;
      const double inv_s2 = 1.0 / (k.sigma * k.sigma);
      const int x0 = std::max(0, k.center.x - r);
      const int x1 = std::min(w - 1, k.center.x + r);
      for (int x = x0; x <= x1; ++x) {
        const int dx = x - k.center.x;
        const float v = static_cast<float>(std::exp(-static_cast<double>(dx * dx + dy * dy) * inv_s2));
        if (v > row[x]) row[x] = v;
      }
    }
  }
}

Tensor splat_gaussians(std::span<const GaussianSpec> keypoints, const GridSpec& grid) {
  Tensor t({static_cast<std::size_t>(grid.grid_h()), static_cast<std::size_t>(grid.grid_w())});
  splat_gaussians_into(t.data(), keypoints, grid);
  return t;
}

namespace ref {

Tensor splat_gaussians(std::span<const GaussianSpec> keypoints, const GridSpec& grid) {
  check_sigmas(keypoints);
  const int w = grid.grid_w();
  const int h = grid.grid_h();
  Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float best = 0.0f;
      for (const auto& k : keypoints) {
        const double dx = x - k.center.x;
        const double dy = y - k.center.y;
        best = std::max(best, static_cast<float>(std::exp(-(dx * dx + dy * dy) / (k.sigma * k.sigma))));
      }
      t[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  return t;
}

}  // namespace ref

double corner_radius(double box_w, double box_h, int stride, double min_iou) {
  if (!(box_w > 0.0) || !(box_h > 0.0)) throw InvalidArgument("degenerate box extent");
  if (stride <= 0) throw InvalidArgument("stride must be positive");
  if (!(min_iou > 0.0) || !(min_iou < 1.0)) throw InvalidArgument("min_iou must lie in (0, 1)");
  const double w = box_w / stride;
  const double h = box_h / stride;
  const double t = min_iou;
  const double b = w + h;

  // Both corners shifted the same way: (w-r)(h-r) / (2wh - (w-r)(h-r)) = t.
  const double r_shift = (b - std::sqrt(b * b - 4.0 * w * h * (1.0 - t) / (1.0 + t))) / 2.0;
  // Both corners moved inward: (w-2r)(h-2r) / wh = t.
  const double r_shrink = (2.0 * b - std::sqrt(4.0 * b * b - 16.0 * (1.0 - t) * w * h)) / 8.0;
  // Both corners moved outward: wh / ((w+2r)(h+2r)) = t.
  const double r_grow =
      (-2.0 * t * b + std::sqrt(4.0 * t * t * b * b - 16.0 * t * (t - 1.0) * w * h)) / (8.0 * t);
  return std::max(0.0, std::min({r_shift, r_shrink, r_grow}));
}

double corner_sigma(double box_w, double box_h, int stride, double min_iou, double sigma_floor) {
  return std::max(sigma_floor, corner_radius(box_w, box_h, stride, min_iou) * defaults::kRadiusToSigma);
}

Cell box_center_cell(const BoundingBoxAnn& box, const GridSpec& grid) {
  return image_to_grid(box.center(), grid);
}

DetectionTargets encode_detections(std::span<const BoundingBoxAnn> boxes, const GridSpec& grid,
                                   const EncoderConfig& cfg) {
  const auto h = static_cast<std::size_t>(grid.grid_h());
  const auto w = static_cast<std::size_t>(grid.grid_w());
  DetectionTargets out{Tensor::chw(kNumDetClasses, h, w), Tensor::chw(4, h, w),
                       Tensor::chw(1, h, w), Mask(h, w)};

  std::vector<std::vector<GaussianSpec>> per_class(kNumDetClasses);
  std::vector<double> owner_area(h * w, -1.0);
  const double s = grid.stride();
  for (const auto& box : boxes) {
    if (box.class_id < 0 || box.class_id >= kNumDetClasses) {
      throw InvalidArgument("box class_id " + std::to_string(box.class_id) + " out of range");
    }
    const Cell c = box_center_cell(box, grid);
    per_class[box.class_id].push_back(
        {c, corner_sigma(box.width(), box.height(), grid.stride(), cfg.min_iou, cfg.sigma_floor)});

    const std::size_t idx = static_cast<std::size_t>(c.y) * w + c.x;
    if (box.area() > owner_area[idx]) {
      owner_area[idx] = box.area();
      out.offsets.at(0, c.y, c.x) = static_cast<float>(c.x - box.x1 / s);
      out.offsets.at(1, c.y, c.x) = static_cast<float>(c.y - box.y1 / s);
      out.offsets.at(2, c.y, c.x) = static_cast<float>(c.x - box.x2 / s);
      out.offsets.at(3, c.y, c.x) = static_cast<float>(c.y - box.y2 / s);
      out.occlusion.at(0, c.y, c.x) = box.occluded ? 1.0f : 0.0f;
      out.center_mask.set(c.y, c.x);
    }
  }
  for (int k = 0; k < kNumDetClasses; ++k) {
    if (!per_class[k].empty()) splat_gaussians_into(out.heatmaps.plane(k), per_class[k], grid);
  }
  return out;
}

std::vector<Point2> resample_polyline(std::span<const Point2> points, double pace) {
  check_polyline(points);
  if (!(pace > 0.0)) throw InvalidArgument("resampling pace must be positive");
  const double total = polyline_length(points);
  std::vector<Point2> out;
  std::size_t seg = 0;
  double seg_start = 0.0;
  // Skip a final sample that would duplicate the endpoint.
  const double eps = 1e-9 * std::max(1.0, total);
  for (std::size_t i = 0;; ++i) {
    const double s = static_cast<double>(i) * pace;
    if (s >= total - eps) break;
    out.push_back(point_at(points, s, seg, seg_start));
  }
  if (out.empty()) out.push_back(points.front());
  out.push_back(points.back());
  return out;
}

std::vector<Point2> resample_polyline_count(std::span<const Point2> points, std::size_t count) {
  check_polyline(points);
  if (count < 2) throw InvalidArgument("resample count must be >= 2");
  const double total = polyline_length(points);
  std::vector<Point2> out;
  out.reserve(count);
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    out.push_back(point_at(points, total * static_cast<double>(i) / static_cast<double>(count - 1), seg,
                           seg_start));
  }
  out.push_back(points.back());
  return out;
}

std::vector<Point2> flatten_cubic_bezier(std::span<const Point2> control, int samples_per_segment) {
  if (control.size() < 4 || (control.size() - 1) % 3 != 0) {
    throw InvalidArgument("cubic bezier needs 3k+1 control points");
  }
  if (samples_per_segment < 1) throw InvalidArgument("samples_per_segment must be >= 1");
  std::vector<Point2> out{control.front()};
  for (std::size_t s = 0; s + 3 < control.size(); s += 3) {
    const Point2 p0 = control[s], p1 = control[s + 1], p2 = control[s + 2], p3 = control[s + 3];
    for (int i = 1; i <= samples_per_segment; ++i) {
      const double t = static_cast<double>(i) / samples_per_segment;
      const double u = 1.0 - t;
      const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
      out.push_back({b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
                     b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y});
    }
  }
  return out;
}

std::vector<Point2> merge_lane_edges(std::span<const Point2> edge_a, std::span<const Point2> edge_b,
                                     double pace) {
  check_polyline(edge_a);
  check_polyline(edge_b);
  if (polyline_length(edge_a) <= 0.0 || polyline_length(edge_b) <= 0.0) {
    throw InvalidArgument("lane edge has zero length");
  }
  const auto a = oriented_by_y({edge_a.begin(), edge_a.end()});
  const auto b = oriented_by_y({edge_b.begin(), edge_b.end()});
  const std::size_t n = std::max(resample_polyline(a, pace).size(), resample_polyline(b, pace).size());
  const auto ra = resample_polyline_count(a, n);
  const auto rb = resample_polyline_count(b, n);
  std::vector<Point2> mid(n);
  for (std::size_t i = 0; i < n; ++i) mid[i] = {(ra[i].x + rb[i].x) / 2.0, (ra[i].y + rb[i].y) / 2.0};
  return mid;
}

std::vector<Cell> lane_keypoints(const LaneInstance& lane, const GridSpec& grid, double pace) {
  const auto samples = resample_polyline(lane.points, pace);
  std::vector<Cell> cells;
  cells.reserve(samples.size());
  for (const auto& p : samples) {
    const Cell c = image_to_grid(p, grid);
    if (cells.empty() || cells.back() != c) cells.push_back(c);
  }
  return cells;
}

LaneTargets encode_lanes(std::span<const LaneInstance> lanes, const GridSpec& grid,
                         const EncoderConfig& cfg) {
  if (!(cfg.lane_sigma > 0.0)) throw InvalidArgument("lane sigma must be positive");
  const auto h = static_cast<std::size_t>(grid.grid_h());
  const auto w = static_cast<std::size_t>(grid.grid_w());
  LaneTargets out{Tensor::chw(kNumLaneClasses, h, w), Tensor::chw(2, h, w), Mask(h, w)};

  std::vector<std::vector<GaussianSpec>> per_class(kNumLaneClasses);
  for (const auto& lane : lanes) {
    if (lane.class_id < 0 || lane.class_id >= kNumLaneClasses) {
      throw InvalidArgument("lane class_id " + std::to_string(lane.class_id) + " out of range");
    }
    const auto kps = lane_keypoints(lane, grid, cfg.lane_pace);
    const Cell mid = kps[lane_midpoint_index(kps.size())];
    for (const Cell& p : kps) {
      per_class[lane.class_id].push_back({p, cfg.lane_sigma});
      out.offsets.at(0, p.y, p.x) = static_cast<float>(mid.x - p.x);
      out.offsets.at(1, p.y, p.x) = static_cast<float>(mid.y - p.y);
      out.kp_mask.set(p.y, p.x);
    }
  }
  for (int l = 0; l < kNumLaneClasses; ++l) {
    if (!per_class[l].empty()) splat_gaussians_into(out.heatmaps.plane(l), per_class[l], grid);
  }
  return out;
}

TargetBundle encode_targets(std::span<const BoundingBoxAnn> boxes,
                            std::span<const LaneInstance> lanes, const GridSpec& grid,
                            const EncoderConfig& cfg) {
  auto det = encode_detections(boxes, grid, cfg);
  auto lane = encode_lanes(lanes, grid, cfg);
  return {std::move(det.heatmaps), std::move(det.offsets),   std::move(det.occlusion),
          std::move(det.center_mask), std::move(lane.heatmaps), std::move(lane.offsets),
          std::move(lane.kp_mask)};
}

}  // namespace centerpercept
