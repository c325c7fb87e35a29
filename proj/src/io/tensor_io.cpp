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

#include "centerpercept/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "centerpercept/types.hpp"

namespace centerpercept::io {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[at + i]) << (8 * i);
  return v;
}

[[noreturn]] void fail(const std::string& source, std::size_t offset, const std::string& what) {
  throw SchemaError(source + ": byte " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() > 255) throw InvalidArgument("tensor rank exceeds 255");
  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 * t.rank() + 4 * t.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  out.push_back(0);
  out.push_back(0);
  for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
  for (float v : t.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 8) fail(source, bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) fail(source, 0, "bad magic, expected TNS1");
  if (bytes[4] != 0) fail(source, 4, "unsupported dtype code " + std::to_string(bytes[4]));
  const std::size_t rank = bytes[5];
  if (bytes[6] != 0 || bytes[7] != 0) fail(source, 6, "reserved bytes must be zero");
  const std::size_t dims_end = 8 + 8 * rank;
  if (bytes.size() < dims_end) fail(source, bytes.size(), "truncated dims");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const auto d = get_le<std::uint64_t>(bytes, 8 + 8 * i);
    if (d != 0 && count > (SIZE_MAX / 4) / d) fail(source, 8 + 8 * i, "dims overflow");
    shape[i] = static_cast<std::size_t>(d);
    count *= shape[i];
  }
  const std::size_t expected = dims_end + 4 * count;
  if (bytes.size() != expected) {
    fail(source, std::min(bytes.size(), expected),
         "payload is " + std::to_string(bytes.size() - dims_end) + " bytes, expected " +
             std::to_string(4 * count));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, dims_end + 4 * i));
    if (!std::isfinite(data[i])) fail(source, dims_end + 4 * i, "non-finite value");
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes, path.string());
}

}  // namespace centerpercept::io
