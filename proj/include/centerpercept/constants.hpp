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

// Defaults shared by the library and the CLI. Values marked "chosen" are not
// fixed by the method description and are configurable everywhere they are
// used.

namespace centerpercept::defaults {

inline constexpr int kStride = 4;
inline constexpr int kInputWidth = 640;
inline constexpr int kInputHeight = 320;

inline constexpr double kDetThreshold = 0.25;
inline constexpr double kLaneSigma = 2.0;
inline constexpr double kHeatmapAlpha = 4.0;
inline constexpr double kHeatmapBeta = 2.0;

// Bias of the last heatmap convolution; sigmoid(4.6) ~= 0.99.
inline constexpr double kHeatmapBiasInit = 4.6;

inline constexpr double kMinIou = 0.7;               // chosen
inline constexpr double kSigmaFloor = 0.5;           // chosen
inline constexpr double kRadiusToSigma = 1.0 / 3.0;  // chosen
inline constexpr double kLanePace = 10.0;            // chosen, input pixels
inline constexpr double kOcclusionThreshold = 0.5;   // chosen
inline constexpr double kClusterDistance = 10.0;     // chosen, grid cells
inline constexpr int kPolyDegree = 3;                // chosen
inline constexpr double kMatchIou = 0.5;

// Lane mask brush width at 1280 px image width; scaled linearly. chosen.
inline constexpr double kLaneWidthAt1280 = 8.0;

}  // namespace centerpercept::defaults
