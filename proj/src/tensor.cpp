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

#include "centerpercept/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "centerpercept/types.hpp"

namespace centerpercept {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw InvalidArgument("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string());
  }
}

std::size_t Tensor::channels() const {
  if (rank() == 3) return shape_[0];
  if (rank() == 2) return 1;
  throw InvalidArgument("expected rank 2 or 3 tensor, got " + shape_string());
}

std::size_t Tensor::height() const {
  if (rank() == 3) return shape_[1];
  if (rank() == 2) return shape_[0];
  throw InvalidArgument("expected rank 2 or 3 tensor, got " + shape_string());
}

std::size_t Tensor::width() const {
  if (rank() == 3) return shape_[2];
  if (rank() == 2) return shape_[1];
  throw InvalidArgument("expected rank 2 or 3 tensor, got " + shape_string());
}

std::span<float> Tensor::plane(std::size_t c) {
  const std::size_t n = height() * width();
  return std::span<float>(data_).subspan(c * n, n);
}

std::span<const float> Tensor::plane(std::size_t c) const {
  const std::size_t n = height() * width();
  return std::span<const float>(data_).subspan(c * n, n);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Tensor Mask::to_tensor() const {
  Tensor t({1, height, width});
  for (std::size_t i = 0; i < bits.size(); ++i) t[i] = bits[i] ? 1.0f : 0.0f;
  return t;
}

Mask Mask::from_tensor(const Tensor& t) {
  Mask m(t.height(), t.width());
  if (t.channels() != 1) throw InvalidArgument("mask tensor must have one channel");
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = t[i] != 0.0f ? 1 : 0;
  return m;
}

}  // namespace centerpercept
