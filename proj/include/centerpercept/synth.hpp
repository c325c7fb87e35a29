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
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "centerpercept/encoder.hpp"
#include "centerpercept/types.hpp"

namespace centerpercept {

/// Portable scene RNG: std::mt19937_64 (bit-exact across standard
/// libraries) with our own conversions, since the standard distributions
/// are implementation-defined.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] (inclusive) by rejection.
  int uniform_int(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneConfig {
  std::uint64_t seed = 0;
  int image_w = 640;
  int image_h = 320;
  int stride = 4;
  int n_boxes_min = 1;
  int n_boxes_max = 12;
  int n_lanes_min = 0;
  int n_lanes_max = 3;
  double box_size_min = 8.0;    // pixels
  double box_size_max = 160.0;  // pixels
  /// Minimum Chebyshev distance between rounded box centers, grid cells.
  /// Any value > 0 makes centers pairwise distinct.
  int min_center_separation = 1;
  int lane_degree_min = 1;
  int lane_degree_max = 3;
  /// Max |dx/dy| of generated lanes.
  double lane_max_slope = 1.5;
  /// Minimum midpoint distance between any two lanes, grid cells.
  double midpoint_separation = 40.0;
  double lane_pace = defaults::kLanePace;
  int max_retries = 2000;

  /// Empty when valid, otherwise the first problem found.
  std::string validate() const;
};

struct Scene {
  std::string name;
  int width = 0;
  int height = 0;
  SceneTags tags;
  std::vector<BoundingBoxAnn> boxes;
  LaneSet lanes;
  /// Generating polynomial of each lane (x = f(y), ascending powers) and its
  /// y range.
  struct LaneCurve {
    std::vector<double> coefficients;
    double y_min = 0.0;
    double y_max = 0.0;
  };
  std::vector<LaneCurve> lane_curves;
};

/// Deterministic in cfg (including seed). Throws GenerationError when the
/// separation constraints cannot be met within cfg.max_retries attempts.
Scene generate_scene(const SceneConfig& cfg);

/// Scene i of a sweep uses seed cfg.seed + i.
std::vector<Scene> generate_scenes(const SceneConfig& cfg, std::size_t count);

/// Perfect network outputs for a scene: exactly the encoder targets.
TargetBundle ideal_outputs(const Scene& scene, const GridSpec& grid, const EncoderConfig& cfg = {});

}  // namespace centerpercept
