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

#include "centerpercept/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace centerpercept {
namespace {

void check_pair(const Tensor& target, const Tensor& pred, const HeatmapLossParams& p) {
  if (!target.same_shape(pred)) {
    throw InvalidArgument("heatmap shapes differ: " + target.shape_string() + " vs " + pred.shape_string());
  }
  if (!(p.alpha >= 0.0) || !(p.beta >= 0.0)) throw InvalidArgument("alpha and beta must be >= 0");
  if (!(p.n_k >= 1.0)) throw InvalidArgument("n_k must be >= 1");
}

inline double cell_loss(double h, double hp, const HeatmapLossParams& p) {
  const double d = h - hp;
  return std::max(std::pow(1.0 + h, p.alpha), std::pow(1.0 + hp, p.beta)) * d * d;
}

inline double cell_grad(double h, double hp, const HeatmapLossParams& p) {
  const double d = h - hp;
  const double wt = std::pow(1.0 + h, p.alpha);
  const double wp = std::pow(1.0 + hp, p.beta);
  if (wt >= wp) return -2.0 * wt * d / p.n_k;
  return (p.beta * std::pow(1.0 + hp, p.beta - 1.0) * d * d - 2.0 * wp * d) / p.n_k;
}

constexpr std::size_t kChunk = 4096;

}  // namespace

double count_target_peaks(const Tensor& target) {
  const auto n = std::count(target.storage().begin(), target.storage().end(), 1.0f);
  return std::max<double>(1.0, static_cast<double>(n));
}

double weighted_l2_loss(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params) {
  check_pair(target, pred, params);
  const std::size_t n = target.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  // Fixed chunking keeps the summation order independent of thread count.
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
    const std::size_t begin = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += cell_loss(target[i], pred[i], params);
    partial[static_cast<std::size_t>(ci)] = acc;
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0) / params.n_k;
}

Tensor weighted_l2_grad(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params) {
  check_pair(target, pred, params);
  Tensor g(pred.shape());
  const auto n = static_cast<std::ptrdiff_t>(pred.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    g[k] = static_cast<float>(cell_grad(target[k], pred[k], params));
  }
  return g;
}

namespace ref {

double weighted_l2_loss(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params) {
  check_pair(target, pred, params);
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) acc += cell_loss(target[i], pred[i], params);
  return acc / params.n_k;
}

Tensor weighted_l2_grad(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params) {
  check_pair(target, pred, params);
  Tensor g(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = static_cast<float>(cell_grad(target[i], pred[i], params));
  return g;
}

}  // namespace ref

double offset_l1_loss(const Tensor& pred, const Tensor& target, const Mask& mask) {
  if (!pred.same_shape(target)) {
    throw InvalidArgument("offset shapes differ: " + pred.shape_string() + " vs " + target.shape_string());
  }
  if (pred.height() != mask.height || pred.width() != mask.width) {
    throw InvalidArgument("offset mask does not match tensor grid");
  }
  const std::size_t c = pred.channels();
  const std::size_t plane = mask.height * mask.width;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask.bits[i]) continue;
    for (std::size_t ch = 0; ch < c; ++ch) acc += std::abs(static_cast<double>(pred[ch * plane + i]) - target[ch * plane + i]);
    count += c;
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double cross_entropy(std::span<const float> logits, int label) {
  if (logits.empty()) throw InvalidArgument("cross_entropy needs at least one logit");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (float z : logits) sum += std::exp(z - m);
  return m + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double occlusion_bce(const Tensor& occl_logits, std::span<const Cell> centers,
                     const std::vector<bool>& flags) {
  if (centers.size() != flags.size()) throw InvalidArgument("centers and flags differ in length");
  if (occl_logits.channels() != 1) throw InvalidArgument("occlusion map must have one channel");
  if (centers.empty()) return 0.0;
  const std::size_t h = occl_logits.height(), w = occl_logits.width();
  double acc = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const Cell c = centers[i];
    if (c.x < 0 || c.y < 0 || static_cast<std::size_t>(c.x) >= w || static_cast<std::size_t>(c.y) >= h) {
      throw InvalidArgument("occlusion center outside grid");
    }
    const double z = occl_logits[static_cast<std::size_t>(c.y) * w + static_cast<std::size_t>(c.x)];
    const double y = flags[i] ? 1.0 : 0.0;
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return acc / static_cast<double>(centers.size());
}

}  // namespace centerpercept
