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


// Parallel kernels against their serial reference twins, plus a full-frame
// decode. Set OMP_NUM_THREADS to compare scaling.

#include <benchmark/benchmark.h>

#include <random>

#include "centerpercept/decoder.hpp"
#include "centerpercept/encoder.hpp"
#include "centerpercept/losses.hpp"
#include "centerpercept/neckops.hpp"
#include "centerpercept/synth.hpp"

namespace {

using namespace centerpercept;

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = u(rng);
  return t;
}

ConvParams conv3x3(std::size_t c) {
  ConvParams p;
  p.weights = random_tensor({c, c, 3, 3}, 1);
  p.padding = 1;
  return p;
}

void BM_Conv2d(benchmark::State& state) {
  const Tensor x = random_tensor({32, 40, 80}, 2);
  const ConvParams p = conv3x3(32);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, p));
}
BENCHMARK(BM_Conv2d)->Unit(benchmark::kMillisecond);

void BM_Conv2dRef(benchmark::State& state) {
  const Tensor x = random_tensor({32, 40, 80}, 2);
  const ConvParams p = conv3x3(32);
  for (auto _ : state) benchmark::DoNotOptimize(ref::conv2d(x, p));
}
BENCHMARK(BM_Conv2dRef)->Unit(benchmark::kMillisecond);

std::vector<GaussianSpec> keypoints() {
  std::vector<GaussianSpec> k;
  for (int i = 0; i < 20; ++i) k.push_back({{(i * 37) % 160, (i * 13) % 80}, 1.0 + i % 5});
  return k;
}

void BM_Splat(benchmark::State& state) {
  const GridSpec grid(640, 320, 4);
  const auto k = keypoints();
  for (auto _ : state) benchmark::DoNotOptimize(splat_gaussians(k, grid));
}
BENCHMARK(BM_Splat)->Unit(benchmark::kMicrosecond);

void BM_SplatRef(benchmark::State& state) {
  const GridSpec grid(640, 320, 4);
  const auto k = keypoints();
  for (auto _ : state) benchmark::DoNotOptimize(ref::splat_gaussians(k, grid));
}
BENCHMARK(BM_SplatRef)->Unit(benchmark::kMicrosecond);

void BM_Peaks(benchmark::State& state) {
  const Tensor m = random_tensor({80, 160}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(extract_peaks(m.data(), 80, 160, 0.25));
}
BENCHMARK(BM_Peaks)->Unit(benchmark::kMicrosecond);

void BM_PeaksRef(benchmark::State& state) {
  const Tensor m = random_tensor({80, 160}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ref::extract_peaks(m.data(), 80, 160, 0.25));
}
BENCHMARK(BM_PeaksRef)->Unit(benchmark::kMicrosecond);

void BM_Loss(benchmark::State& state) {
  const Tensor h = random_tensor({10, 80, 160}, 4), p = random_tensor({10, 80, 160}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_l2_loss(h, p));
}
BENCHMARK(BM_Loss)->Unit(benchmark::kMicrosecond);

void BM_LossRef(benchmark::State& state) {
  const Tensor h = random_tensor({10, 80, 160}, 4), p = random_tensor({10, 80, 160}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ref::weighted_l2_loss(h, p));
}
BENCHMARK(BM_LossRef)->Unit(benchmark::kMicrosecond);

void BM_DecodeFrame(benchmark::State& state) {
  SceneConfig cfg;
  cfg.seed = 77;
  cfg.n_lanes_min = 2;
  const Scene s = generate_scene(cfg);
  const GridSpec grid(s.width, s.height, 4);
  const TargetBundle t = ideal_outputs(s, grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_boxes(t.det_heatmaps, t.det_offsets, t.occlusion, grid));
    benchmark::DoNotOptimize(decode_lanes(t.lane_heatmaps, t.lane_offsets, grid));
  }
}
BENCHMARK(BM_DecodeFrame)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
