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

#include "centerpercept/annotation_io.hpp"
#include "centerpercept/decoder.hpp"
#include "centerpercept/encoder.hpp"
#include "centerpercept/metrics.hpp"
#include "centerpercept/tensor.hpp"

namespace centerpercept::io {

// Head file suffixes, one file per head per frame: <frame>.<head>.tns
inline constexpr std::array<std::string_view, 8> kHeadNames{
    "det_heatmaps", "det_offsets", "occlusion", "center_mask",
    "lane_heatmaps", "lane_offsets", "lane_kp_mask", "tags"};

inline constexpr std::size_t kTagLogits = kNumWeather + kNumScene + kNumTimeOfDay;

/// Network outputs (or encoded targets) for one frame.
struct FrameTensors {
  std::string name;
  Tensor det_heatmaps;
  Tensor det_offsets;
  Tensor occlusion;
  Tensor lane_heatmaps;
  Tensor lane_offsets;
  std::optional<Tensor> center_mask;
  std::optional<Tensor> lane_kp_mask;
  std::optional<Tensor> tags;  // 18 logits: weather | scene | time of day
};

std::filesystem::path head_path(const std::filesystem::path& dir, const std::string& frame,
                                std::string_view head);

/// One-hot tag logits for a labelled frame.
Tensor tags_to_tensor(const SceneTags& tags);
/// Per-group argmax of an 18-logit tag vector.
SceneTags tags_from_tensor(const Tensor& logits);

FrameTensors bundle_to_tensors(const std::string& name, const TargetBundle& bundle,
                               const std::optional<SceneTags>& tags);

void write_frame_tensors(const std::filesystem::path& dir, const FrameTensors& frame);
FrameTensors read_frame_tensors(const std::filesystem::path& dir, const std::string& frame);

/// Frame names with a det_heatmaps file in `dir`, sorted.
std::vector<std::string> list_frames(const std::filesystem::path& dir);

struct DecodeOptions {
  int stride = defaults::kStride;
  BoxDecodeConfig boxes;
  LaneDecodeConfig lanes;
  bool logits = false;  // heads hold pre-activation values; apply sigmoid first
};

Frame decode_frame(const FrameTensors& tensors, const DecodeOptions& opts = {});

struct EvalOptions {
  double iou_thresh = defaults::kMatchIou;
  int lane_width = 0;  // pixels; 0 = scaled default per frame width
};

struct EvalReport {
  ApResult ap;
  OcclusionAccuracy occlusion;
  double lane_iou = 1.0;
  std::vector<int> lane_widths;
  std::optional<double> f1_weather;
  std::optional<double> f1_scene;
  std::optional<double> f1_tod;
  std::size_t frames = 0;
};

/// Matches frames by name. Ground-truth frames without a prediction count as
/// empty predictions; predictions for unknown frames are a schema error.
EvalReport evaluate(const std::vector<Frame>& preds, const std::vector<Frame>& gts,
                    const EvalOptions& opts = {});

std::string report_to_json(const EvalReport& report);

/// Polyline used for lane rasterization: the fitted curve when present,
/// otherwise the keypoints.
std::vector<Point2> lane_polyline(const Frame& frame, std::size_t lane);

}  // namespace centerpercept::io
