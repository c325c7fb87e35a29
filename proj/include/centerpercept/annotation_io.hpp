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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "centerpercept/decoder.hpp"
#include "centerpercept/tensor_io.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept::io {

// Category tables of the supported label subset; index = class id.
inline constexpr std::array<std::string_view, kNumDetClasses> kDetCategories{
    "pedestrian", "rider",      "car",     "truck",         "bus",
    "train",      "motorcycle", "bicycle", "traffic light", "traffic sign"};
inline constexpr std::array<std::string_view, kNumLaneClasses> kLaneCategories{
    "crosswalk", "double other", "double white", "double yellow",
    "road curb", "single other", "single white", "single yellow"};
inline constexpr std::array<std::string_view, kNumWeather> kWeatherTags{
    "rainy", "snowy", "clear", "overcast", "undefined", "partly cloudy", "foggy"};
inline constexpr std::array<std::string_view, kNumScene> kSceneTags{
    "tunnel", "residential", "parking lot", "undefined", "city street", "gas stations", "highway"};
inline constexpr std::array<std::string_view, kNumTimeOfDay> kTimeOfDayTags{"daytime", "night", "dawn/dusk",
                                                                            "undefined"};

/// One annotated (or predicted) frame. Predictions use the same layout;
/// boxes then carry scores and lanes may carry a fitted polynomial.
struct Frame {
  std::string name;
  int width = 0;
  int height = 0;
  std::optional<SceneTags> tags;
  std::vector<BoundingBoxAnn> boxes;
  LaneSet lanes;
  /// Parallel to `lanes`; empty optional when the lane has no fitted curve.
  std::vector<std::optional<LanePolynomial>> lane_polys;
};

/// Parses and validates an annotation document (top-level array of frames).
/// Syntax errors report line and column, structural errors a JSON path.
std::vector<Frame> parse_frames(std::string_view text, const std::string& source = "<memory>");
std::vector<Frame> read_frames_file(const std::filesystem::path& path);

std::string frames_to_json(const std::vector<Frame>& frames);
void write_frames_file(const std::filesystem::path& path, const std::vector<Frame>& frames);

}  // namespace centerpercept::io
