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
#include <filesystem>
#include <span>
#include <vector>

#include "centerpercept/annotation_io.hpp"
#include "centerpercept/encoder.hpp"

namespace centerpercept::io {

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
};

std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

void draw_rect(RgbImage& img, const BoundingBoxAnn& box, Rgb color);
void draw_polyline(RgbImage& img, std::span<const Point2> points, Rgb color);

/// Ground truth heatmaps (detection in red, lanes in blue) upsampled to the
/// image, ground truth boxes and lanes in white/green, predictions (if any)
/// in yellow/magenta.
RgbImage render_overlay(const Frame& gt, const Frame* pred, int stride = defaults::kStride,
                        const EncoderConfig& cfg = {});

}  // namespace centerpercept::io
