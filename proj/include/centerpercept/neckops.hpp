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

#include <vector>

#include "centerpercept/tensor.hpp"

namespace centerpercept {

/// Convolution parameters. For conv2d the weights are
/// out_ch x (in_ch / groups) x kH x kW; for transposed_conv2d they are
/// in_ch x (out_ch / groups) x kH x kW. Bias is empty or has out_ch entries.
struct ConvParams {
  Tensor weights;
  Tensor bias;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  /// 1x1 identity over `channels` channels.
  static ConvParams identity(std::size_t channels);
};

/// Zero-padded cross-correlation. OpenMP over output channels; accumulates
/// shifted rows so the inner loop is contiguous.
Tensor conv2d(const Tensor& input, const ConvParams& params);

/// Transposed convolution (gradient of conv2d w.r.t. its input), output
/// side (H - 1) * stride - 2 * padding + kH.
Tensor transposed_conv2d(const Tensor& input, const ConvParams& params);

/// Depthwise transposed-convolution weights performing bilinear upsampling
/// by kernel_size / 2. kernel_size = 4 gives stride 2, padding 1, so the
/// output is exactly twice the input.
ConvParams bilinear_kernel(std::size_t channels, int kernel_size = 4);

/// out[y][x] = in[y / factor][x / factor].
Tensor upsample_nearest(const Tensor& input, int factor);

/// Window max, floor output size (H - k) / stride + 1.
Tensor maxpool(const Tensor& input, int kernel = 2, int stride = 2);

/// Scalar fusion weights per pyramid level, finest first.
struct FusionWeights {
  std::vector<float> top_down;
  std::vector<float> bottom_up;

  /// Copy with negative entries clamped to zero.
  FusionWeights clamped() const;
};

struct BifpnParams {
  FusionWeights weights;
  std::vector<ConvParams> top_down_convs;   // unused at the coarsest level
  std::vector<ConvParams> bottom_up_convs;  // unused at the finest level

  static BifpnParams identity(std::size_t levels, std::size_t channels, float weight = 0.0f);
};

/// BiFPN fusion over a pyramid ordered finest to coarsest (e.g. strides
/// 4, 8, 16, 32), each level exactly half the spatial size of the previous.
///
///   top-down:   T_top = F_top;     T_s = Conv(F_s + up(T_{2s}) * wT_s)
///   bottom-up:  B_fine = T_fine;   B_s = Conv(T_s + down(B_{s/2}) * wB_s)
///
/// `up` is 2x nearest upsampling, `down` is 2x2 max pooling. Returns every
/// B level; front() feeds the dense heads, back() the tagging head.
std::vector<Tensor> bifpn_fuse(const std::vector<Tensor>& pyramid, const BifpnParams& params);

struct SimpleNeckParams {
  std::vector<ConvParams> convs;  // convs.size() == ups.size() + 1
  std::vector<ConvParams> ups;    // transposed, typically bilinear_kernel()
};

struct NeckOutput {
  Tensor dense;    // finest output
  Tensor tagging;  // output of the first convolution
};

/// conv[0], then (up[i], conv[i + 1]) for each upsampling stage.
NeckOutput simple_neck(const Tensor& coarsest, const SimpleNeckParams& params);

namespace ref {
// Direct serial loops, one output element at a time.
Tensor conv2d(const Tensor& input, const ConvParams& params);
Tensor transposed_conv2d(const Tensor& input, const ConvParams& params);
}  // namespace ref

}  // namespace centerpercept
