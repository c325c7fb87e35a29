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


#include "centerpercept/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "centerpercept/pipeline.hpp"

namespace centerpercept::io {

void RgbImage::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  std::copy(c.begin(), c.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i));
}

Rgb RgbImage::get(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  const auto bytes = encode_ppm(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void draw_polyline(RgbImage& img, std::span<const Point2> points, Rgb color) {
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Point2 a = points[i], b = points[i + 1];
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(b.x - a.x), std::abs(b.y - a.y)))));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      img.set(static_cast<int>(std::floor(a.x + t * (b.x - a.x))), static_cast<int>(std::floor(a.y + t * (b.y - a.y))),
              color);
    }
  }
  if (points.size() == 1) img.set(static_cast<int>(points[0].x), static_cast<int>(points[0].y), color);
}

void draw_rect(RgbImage& img, const BoundingBoxAnn& box, Rgb color) {
  const Point2 pts[5] = {{box.x1, box.y1}, {box.x2, box.y1}, {box.x2, box.y2}, {box.x1, box.y2}, {box.x1, box.y1}};
  draw_polyline(img, pts, color);
}

RgbImage render_overlay(const Frame& gt, const Frame* pred, int stride, const EncoderConfig& cfg) {
  const GridSpec grid(gt.width, gt.height, stride);
  const auto targets = encode_targets(gt.boxes, gt.lanes, grid, cfg);
  RgbImage img(gt.width, gt.height);
  const auto hm_max = [](const Tensor& t, std::size_t y, std::size_t x) {
    float m = 0.0f;
    for (std::size_t c = 0; c < t.channels(); ++c) m = std::max(m, t.at(c, y, x));
    return m;
  };
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      const auto gy = static_cast<std::size_t>(y / stride), gx = static_cast<std::size_t>(x / stride);
      const auto r = static_cast<std::uint8_t>(std::lround(200.0f * hm_max(targets.det_heatmaps, gy, gx)));
      const auto b = static_cast<std::uint8_t>(std::lround(200.0f * hm_max(targets.lane_heatmaps, gy, gx)));
      img.set(x, y, {r, 0, b});
    }
  }
  for (const auto& box : gt.boxes) draw_rect(img, box, {255, 255, 255});
  for (std::size_t i = 0; i < gt.lanes.size(); ++i) draw_polyline(img, lane_polyline(gt, i), {0, 255, 0});
  if (pred) {
    for (const auto& box : pred->boxes) draw_rect(img, box, {255, 255, 0});
    for (std::size_t i = 0; i < pred->lanes.size(); ++i) draw_polyline(img, lane_polyline(*pred, i), {255, 0, 255});
  }
  return img;
}

}  // namespace centerpercept::io
