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
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "centerpercept/tensor.hpp"

namespace centerpercept::io {

/// Malformed input file. The message carries the source name and a byte
/// offset or line/column, or a JSON path for structural problems.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor file layout (all integers little-endian):
///
///   offset 0   "TNS1"
///   offset 4   u8 dtype (0 = float32)
///   offset 5   u8 rank
///   offset 6   2 zero bytes
///   offset 8   rank x u64 dims
///   then       product(dims) x float32, row-major
inline constexpr char kTensorMagic[4] = {'T', 'N', 'S', '1'};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

void write_tensor_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_file(const std::filesystem::path& path);

}  // namespace centerpercept::io
