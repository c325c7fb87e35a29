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

#include "centerpercept/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace centerpercept {
namespace {

void sort_peaks(std::vector<Peak>& peaks) {
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cell.y != b.cell.y) return a.cell.y < b.cell.y;
    return a.cell.x < b.cell.x;
  });
}

bool is_local_max(std::span<const float> plane, std::size_t h, std::size_t w, std::size_t y,
                  std::size_t x) {
  const float v = plane[y * w + x];
  const std::size_t y0 = y > 0 ? y - 1 : 0, y1 = std::min(h - 1, y + 1);
  const std::size_t x0 = x > 0 ? x - 1 : 0, x1 = std::min(w - 1, x + 1);
  for (std::size_t yy = y0; yy <= y1; ++yy) {
    const float* row = plane.data() + yy * w;
    for (std::size_t xx = x0; xx <= x1; ++xx) {
      if (row[xx] > v) return false;
    }
  }
  return true;
}

void expect_shape(const Tensor& t, std::size_t c, const GridSpec& grid, const char* name) {
  const std::vector<std::size_t> want{c, static_cast<std::size_t>(grid.grid_h()),
                                      static_cast<std::size_t>(grid.grid_w())};
  if (t.shape() != want) {
    throw InvalidArgument(std::string(name) + " has shape " + t.shape_string() + ", expected [" +
                          std::to_string(c) + "x" + std::to_string(grid.grid_h()) + "x" +
                          std::to_string(grid.grid_w()) + "]");
  }
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Peak> extract_peaks(std::span<const float> plane, std::size_t height, std::size_t width,
                                double threshold) {
  if (plane.size() != height * width) throw InvalidArgument("heatmap plane size mismatch");
  std::vector<std::vector<Peak>> rows(height);
  const auto th = static_cast<float>(threshold);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yi = 0; yi < static_cast<std::ptrdiff_t>(height); ++yi) {
    const auto y = static_cast<std::size_t>(yi);
    const float* row = plane.data() + y * width;
    for (std::size_t x = 0; x < width; ++x) {
      if (row[x] >= th && is_local_max(plane, height, width, y, x)) {
        rows[y].push_back({{static_cast<int>(x), static_cast<int>(y)}, row[x]});
      }
    }
  }
  std::vector<Peak> peaks;
  for (auto& r : rows) peaks.insert(peaks.end(), r.begin(), r.end());
  sort_peaks(peaks);
  return peaks;
}

std::vector<Peak> extract_peaks(const Tensor& heatmap, double threshold) {
  if (heatmap.channels() != 1) throw InvalidArgument("extract_peaks expects a single plane");
  return extract_peaks(heatmap.data(), heatmap.height(), heatmap.width(), threshold);
}

namespace ref {

std::vector<Peak> extract_peaks(std::span<const float> plane, std::size_t height, std::size_t width,
                                double threshold) {
  if (plane.size() != height * width) throw InvalidArgument("heatmap plane size mismatch");
  std::vector<Peak> peaks;
  const auto th = static_cast<float>(threshold);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const float v = plane[y * width + x];
      if (v >= th && is_local_max(plane, height, width, y, x)) {
        peaks.push_back({{static_cast<int>(x), static_cast<int>(y)}, v});
      }
    }
  }
  sort_peaks(peaks);
  return peaks;
}

}  // namespace ref

Detections decode_boxes(const Tensor& det_heatmaps, const Tensor& det_offsets,
                        const Tensor& occlusion, const GridSpec& grid, const BoxDecodeConfig& cfg) {
  expect_shape(det_heatmaps, kNumDetClasses, grid, "det_heatmaps");
  expect_shape(det_offsets, 4, grid, "det_offsets");
  expect_shape(occlusion, 1, grid, "occlusion");
  const double s = grid.stride();
  const double w_img = grid.input_w();
  const double h_img = grid.input_h();
  const auto h = det_heatmaps.height();
  const auto w = det_heatmaps.width();

  Detections out;
  for (int k = 0; k < kNumDetClasses; ++k) {
    for (const Peak& p : extract_peaks(det_heatmaps.plane(k), h, w, cfg.threshold)) {
      const auto cx = static_cast<std::size_t>(p.cell.x);
      const auto cy = static_cast<std::size_t>(p.cell.y);
      BoundingBoxAnn box;
      box.x1 = std::clamp((p.cell.x - static_cast<double>(det_offsets.at(0, cy, cx))) * s, 0.0, w_img);
      box.y1 = std::clamp((p.cell.y - static_cast<double>(det_offsets.at(1, cy, cx))) * s, 0.0, h_img);
      box.x2 = std::clamp((p.cell.x - static_cast<double>(det_offsets.at(2, cy, cx))) * s, 0.0, w_img);
      box.y2 = std::clamp((p.cell.y - static_cast<double>(det_offsets.at(3, cy, cx))) * s, 0.0, h_img);
      if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) continue;
      box.class_id = k;
      box.score = p.score;
      box.occluded = occlusion.at(0, cy, cx) >= cfg.occl_threshold;
      out.push_back(box);
    }
  }
  return out;
}

std::vector<WardMerge> ward_hierarchy(std::span<const Point2> points) {
  const std::size_t n = points.size();
  std::vector<WardMerge> merges;
  if (n < 2) return merges;
  merges.reserve(n - 1);

  // Squared Ward linkage between active slots; a merged cluster lives in the
  // lower of the two slots, which is therefore its smallest member index.
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      d2[i * n + j] = d2[j * n + i] = dx * dx + dy * dy;
    }
  }
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::size_t remaining = n;

  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::size_t a = chain.back();
    // Prefer the previous chain element on ties so the chain terminates.
    std::size_t best = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    double best_d = best < n ? d2[a * n + best] : INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (d2[a * n + j] < best_d) {
        best_d = d2[a * n + j];
        best = j;
      }
    }
    if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t lo = std::min(a, best), hi = std::max(a, best);
      merges.push_back({lo, hi, std::sqrt(best_d)});
      const double ni = size[lo], nj = size[hi];
      for (std::size_t k = 0; k < n; ++k) {
        if (!active[k] || k == lo || k == hi) continue;
        const double nk = size[k];
        const double v =
            ((ni + nk) * d2[k * n + lo] + (nj + nk) * d2[k * n + hi] - nk * best_d) / (ni + nj + nk);
        d2[k * n + lo] = d2[lo * n + k] = v;
      }
      size[lo] = ni + nj;
      active[hi] = 0;
      --remaining;
    } else {
      chain.push_back(best);
    }
  }
  std::stable_sort(merges.begin(), merges.end(),
                   [](const WardMerge& x, const WardMerge& y) { return x.distance < y.distance; });
  return merges;
}

std::vector<int> cluster_by_midpoint(std::span<const Point2> keypoints, std::span<const Point2> votes,
                                     double dist_threshold) {
  if (keypoints.size() != votes.size()) {
    throw InvalidArgument("keypoints and votes differ in length");
  }
  const std::size_t n = votes.size();
  if (n == 0) return {};
  DisjointSets sets(n);
  for (const auto& m : ward_hierarchy(votes)) {
    if (m.distance > dist_threshold) break;
    sets.unite(m.a, m.b);
  }
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++count[sets.find(i)];
  // Roots are smallest members, so ordering roots by index breaks size ties.
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (sets.find(i) == i) roots.push_back(i);
  }
  std::stable_sort(roots.begin(), roots.end(),
                   [&](std::size_t a, std::size_t b) { return count[a] > count[b]; });
  std::vector<int> label_of_root(n, -1);
  for (std::size_t l = 0; l < roots.size(); ++l) label_of_root[roots[l]] = static_cast<int>(l);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = label_of_root[sets.find(i)];
  return labels;
}

double LanePolynomial::operator()(double y) const {
  double x = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) x = x * y + *it;
  return x;
}

std::vector<Point2> sample_polynomial(const LanePolynomial& poly, double step) {
  if (!(step > 0.0)) throw InvalidArgument("sampling step must be positive");
  std::vector<Point2> pts;
  for (double y = poly.y_min; y < poly.y_max; y += step) pts.push_back({poly(y), y});
  pts.push_back({poly(poly.y_max), poly.y_max});
  if (pts.size() == 1) pts.push_back(pts.front());
  return pts;
}

LaneDecodeResult decode_lanes(const Tensor& lane_heatmaps, const Tensor& lane_offsets,
                              const GridSpec& grid, const LaneDecodeConfig& cfg) {
  expect_shape(lane_heatmaps, kNumLaneClasses, grid, "lane_heatmaps");
  expect_shape(lane_offsets, 2, grid, "lane_offsets");
  if (cfg.poly_degree < 0) throw InvalidArgument("poly_degree must be >= 0");
  const double s = grid.stride();
  const auto h = lane_heatmaps.height();
  const auto w = lane_heatmaps.width();

  LaneDecodeResult out;
  for (int l = 0; l < kNumLaneClasses; ++l) {
    const auto peaks = extract_peaks(lane_heatmaps.plane(l), h, w, cfg.threshold);
    if (peaks.empty()) continue;
    std::vector<Point2> keypoints, votes;
    keypoints.reserve(peaks.size());
    votes.reserve(peaks.size());
    for (const Peak& p : peaks) {
      const auto cx = static_cast<std::size_t>(p.cell.x);
      const auto cy = static_cast<std::size_t>(p.cell.y);
      keypoints.push_back({static_cast<double>(p.cell.x), static_cast<double>(p.cell.y)});
      votes.push_back({p.cell.x + static_cast<double>(lane_offsets.at(0, cy, cx)),
                       p.cell.y + static_cast<double>(lane_offsets.at(1, cy, cx))});
    }
    const auto labels = cluster_by_midpoint(keypoints, votes, cfg.dist_threshold);
    const int n_clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<LaneInstance> lanes(static_cast<std::size_t>(n_clusters));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      lanes[labels[i]].points.push_back({keypoints[i].x * s, keypoints[i].y * s});
    }
    for (auto& lane : lanes) {
      // A lone keypoint cannot form a lane.
      if (lane.points.size() < 2) continue;
      lane.class_id = l;
      std::sort(lane.points.begin(), lane.points.end(), [](const Point2& a, const Point2& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
      });
      if (static_cast<int>(lane.points.size()) >= cfg.poly_degree + 1) {
        try {
          LanePolynomial poly = fit_polynomial(lane.points, cfg.poly_degree);
          poly.class_id = l;
          poly.lane_index = out.lanes.size();
          out.polynomials.push_back(std::move(poly));
        } catch (const DegenerateFit&) {
          // Horizontal cluster; keep the keypoints without a curve.
        }
      }
      out.lanes.push_back(std::move(lane));
    }
  }
  return out;
}

}  // namespace centerpercept
