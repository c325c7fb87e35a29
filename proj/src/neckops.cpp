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

#include "centerpercept/neckops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "centerpercept/types.hpp"

namespace centerpercept {
namespace {

struct ConvGeometry {
  std::size_t in_ch, out_ch, in_h, in_w, out_h, out_w, kh, kw, group_in, group_out;
  int stride, pad, groups;
};

void check_common(const Tensor& input, const ConvParams& p) {
  if (input.rank() != 3) throw InvalidArgument("conv input must be C x H x W, got " + input.shape_string());
  if (p.weights.rank() != 4) throw InvalidArgument("conv weights must be rank 4");
  if (p.stride <= 0) throw InvalidArgument("conv stride must be positive");
  if (p.padding < 0) throw InvalidArgument("conv padding must be non-negative");
  if (p.groups <= 0) throw InvalidArgument("conv groups must be positive");
}

ConvGeometry conv_geometry(const Tensor& input, const ConvParams& p) {
  check_common(input, p);
  ConvGeometry g{};
  g.in_ch = input.dim(0);
  g.in_h = input.dim(1);
  g.in_w = input.dim(2);
  g.out_ch = p.weights.dim(0);
  g.kh = p.weights.dim(2);
  g.kw = p.weights.dim(3);
  g.stride = p.stride;
  g.pad = p.padding;
  g.groups = p.groups;
  const auto groups = static_cast<std::size_t>(p.groups);
  if (g.in_ch % groups != 0 || g.out_ch % groups != 0) {
    throw InvalidArgument("channels not divisible by groups");
  }
  g.group_in = g.in_ch / groups;
  g.group_out = g.out_ch / groups;
  if (p.weights.dim(1) != g.group_in) {
    throw InvalidArgument("conv weights " + p.weights.shape_string() + " do not match " +
                          std::to_string(g.in_ch) + " input channels");
  }
  if (!p.bias.empty() && p.bias.size() != g.out_ch) throw InvalidArgument("conv bias size mismatch");
  const auto padded_h = static_cast<std::ptrdiff_t>(g.in_h) + 2 * g.pad;
  const auto padded_w = static_cast<std::ptrdiff_t>(g.in_w) + 2 * g.pad;
  if (padded_h < static_cast<std::ptrdiff_t>(g.kh) || padded_w < static_cast<std::ptrdiff_t>(g.kw)) {
    throw InvalidArgument("conv kernel larger than padded input");
  }
  g.out_h = static_cast<std::size_t>((padded_h - static_cast<std::ptrdiff_t>(g.kh)) / g.stride + 1);
  g.out_w = static_cast<std::size_t>((padded_w - static_cast<std::ptrdiff_t>(g.kw)) / g.stride + 1);
  return g;
}

ConvGeometry tconv_geometry(const Tensor& input, const ConvParams& p) {
  check_common(input, p);
  ConvGeometry g{};
  g.in_ch = input.dim(0);
  g.in_h = input.dim(1);
  g.in_w = input.dim(2);
  g.kh = p.weights.dim(2);
  g.kw = p.weights.dim(3);
  g.stride = p.stride;
  g.pad = p.padding;
  g.groups = p.groups;
  const auto groups = static_cast<std::size_t>(p.groups);
  if (p.weights.dim(0) != g.in_ch) {
    throw InvalidArgument("transposed conv weights " + p.weights.shape_string() + " do not match " +
                          std::to_string(g.in_ch) + " input channels");
  }
  if (g.in_ch % groups != 0) throw InvalidArgument("channels not divisible by groups");
  g.group_in = g.in_ch / groups;
  g.group_out = p.weights.dim(1);
  g.out_ch = g.group_out * groups;
  if (!p.bias.empty() && p.bias.size() != g.out_ch) throw InvalidArgument("conv bias size mismatch");
  const auto oh = (static_cast<std::ptrdiff_t>(g.in_h) - 1) * g.stride - 2 * g.pad +
                  static_cast<std::ptrdiff_t>(g.kh);
  const auto ow = (static_cast<std::ptrdiff_t>(g.in_w) - 1) * g.stride - 2 * g.pad +
                  static_cast<std::ptrdiff_t>(g.kw);
  if (oh <= 0 || ow <= 0) throw InvalidArgument("transposed conv output would be empty");
  g.out_h = static_cast<std::size_t>(oh);
  g.out_w = static_cast<std::size_t>(ow);
  return g;
}

float weight(const ConvParams& p, std::size_t a, std::size_t b, std::size_t ky, std::size_t kx) {
  const auto& w = p.weights;
  return w[((a * w.dim(1) + b) * w.dim(2) + ky) * w.dim(3) + kx];
}

float bias_of(const ConvParams& p, std::size_t oc) { return p.bias.empty() ? 0.0f : p.bias[oc]; }

// Valid [lo, hi) output range along one axis for kernel tap `k`:
// in = out * stride - pad + k must lie in [0, in_n).
std::pair<std::ptrdiff_t, std::ptrdiff_t> conv_out_range(std::ptrdiff_t k, std::ptrdiff_t in_n,
                                                         std::ptrdiff_t out_n, int stride, int pad) {
  const std::ptrdiff_t off = k - pad;
  std::ptrdiff_t lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  std::ptrdiff_t hi = in_n - off > 0 ? (in_n - 1 - off) / stride + 1 : 0;
  return {std::max<std::ptrdiff_t>(lo, 0), std::min(hi, out_n)};
}

}  // namespace

ConvParams ConvParams::identity(std::size_t channels) {
  ConvParams p;
  p.weights = Tensor({channels, channels, 1, 1});
  for (std::size_t c = 0; c < channels; ++c) p.weights[c * channels + c] = 1.0f;
  p.bias = Tensor({channels});
  return p;
}

Tensor conv2d(const Tensor& input, const ConvParams& params) {
  const ConvGeometry g = conv_geometry(input, params);
  Tensor out = Tensor::chw(g.out_ch, g.out_h, g.out_w);
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h), iw = static_cast<std::ptrdiff_t>(g.in_w);
  const auto oh = static_cast<std::ptrdiff_t>(g.out_h), ow = static_cast<std::ptrdiff_t>(g.out_w);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t oci = 0; oci < static_cast<std::ptrdiff_t>(g.out_ch); ++oci) {
    const auto oc = static_cast<std::size_t>(oci);
    float* dst = out.plane(oc).data();
    std::fill(dst, dst + g.out_h * g.out_w, bias_of(params, oc));
    const std::size_t group = oc / g.group_out;
    for (std::size_t icg = 0; icg < g.group_in; ++icg) {
      const float* src = input.plane(group * g.group_in + icg).data();
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const auto [y0, y1] = conv_out_range(static_cast<std::ptrdiff_t>(ky), ih, oh, g.stride, g.pad);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const float wv = weight(params, oc, icg, ky, kx);
          if (wv == 0.0f) continue;
          const auto [x0, x1] = conv_out_range(static_cast<std::ptrdiff_t>(kx), iw, ow, g.stride, g.pad);
          for (std::ptrdiff_t oy = y0; oy < y1; ++oy) {
            const std::ptrdiff_t iy = oy * g.stride - g.pad + static_cast<std::ptrdiff_t>(ky);
            float* drow = dst + oy * ow;
            const std::ptrdiff_t base = iy * iw - g.pad + static_cast<std::ptrdiff_t>(kx);
            if (g.stride == 1) {
              for (std::ptrdiff_t ox = x0; ox < x1; ++ox) drow[ox] += wv * src[base + ox];
            } else {
              for (std::ptrdiff_t ox = x0; ox < x1; ++ox) drow[ox] += wv * src[base + ox * g.stride];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor transposed_conv2d(const Tensor& input, const ConvParams& params) {
  const ConvGeometry g = tconv_geometry(input, params);
  Tensor out = Tensor::chw(g.out_ch, g.out_h, g.out_w);
  const auto oh = static_cast<std::ptrdiff_t>(g.out_h), ow = static_cast<std::ptrdiff_t>(g.out_w);
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h), iw = static_cast<std::ptrdiff_t>(g.in_w);

  // Each output channel is owned by one thread, so the scatter is race-free.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t oci = 0; oci < static_cast<std::ptrdiff_t>(g.out_ch); ++oci) {
    const auto oc = static_cast<std::size_t>(oci);
    float* dst = out.plane(oc).data();
    std::fill(dst, dst + g.out_h * g.out_w, bias_of(params, oc));
    const std::size_t group = oc / g.group_out;
    const std::size_t ocg = oc % g.group_out;
    for (std::size_t icg = 0; icg < g.group_in; ++icg) {
      const std::size_t ic = group * g.group_in + icg;
      const float* src = input.plane(ic).data();
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const float wv = weight(params, ic, ocg, ky, kx);
          if (wv == 0.0f) continue;
          for (std::ptrdiff_t iy = 0; iy < ih; ++iy) {
            const std::ptrdiff_t oy = iy * g.stride - g.pad + static_cast<std::ptrdiff_t>(ky);
            if (oy < 0 || oy >= oh) continue;
            for (std::ptrdiff_t ix = 0; ix < iw; ++ix) {
              const std::ptrdiff_t ox = ix * g.stride - g.pad + static_cast<std::ptrdiff_t>(kx);
              if (ox < 0 || ox >= ow) continue;
              dst[oy * ow + ox] += wv * src[iy * iw + ix];
            }
          }
        }
      }
    }
  }
  return out;
}

namespace ref {

Tensor conv2d(const Tensor& input, const ConvParams& params) {
  const ConvGeometry g = conv_geometry(input, params);
  Tensor out = Tensor::chw(g.out_ch, g.out_h, g.out_w);
  for (std::size_t oc = 0; oc < g.out_ch; ++oc) {
    const std::size_t group = oc / g.group_out;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        double acc = bias_of(params, oc);
        for (std::size_t icg = 0; icg < g.group_in; ++icg) {
          const std::size_t ic = group * g.group_in + icg;
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - g.pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - g.pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              acc += static_cast<double>(weight(params, oc, icg, ky, kx)) *
                     input.at(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(oc, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor transposed_conv2d(const Tensor& input, const ConvParams& params) {
  const ConvGeometry g = tconv_geometry(input, params);
  Tensor out = Tensor::chw(g.out_ch, g.out_h, g.out_w);
  for (std::size_t oc = 0; oc < g.out_ch; ++oc) {
    const std::size_t group = oc / g.group_out;
    const std::size_t ocg = oc % g.group_out;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        double acc = bias_of(params, oc);
        // oy = iy * stride - pad + ky  =>  iy = (oy + pad - ky) / stride when exact.
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const auto ny = static_cast<std::ptrdiff_t>(oy) + g.pad - static_cast<std::ptrdiff_t>(ky);
          if (ny < 0 || ny % g.stride != 0) continue;
          const std::ptrdiff_t iy = ny / g.stride;
          if (iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const auto nx = static_cast<std::ptrdiff_t>(ox) + g.pad - static_cast<std::ptrdiff_t>(kx);
            if (nx < 0 || nx % g.stride != 0) continue;
            const std::ptrdiff_t ix = nx / g.stride;
            if (ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            for (std::size_t icg = 0; icg < g.group_in; ++icg) {
              const std::size_t ic = group * g.group_in + icg;
              acc += static_cast<double>(weight(params, ic, ocg, ky, kx)) *
                     input.at(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(oc, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace ref

ConvParams bilinear_kernel(std::size_t channels, int kernel_size) {
  if (kernel_size < 2 || kernel_size % 2 != 0) throw InvalidArgument("bilinear kernel size must be even");
  if (channels == 0) throw InvalidArgument("bilinear kernel needs at least one channel");
  const int factor = kernel_size / 2;
  const double center = factor - 0.5;
  const auto k = static_cast<std::size_t>(kernel_size);
  std::vector<float> taps(k);
  for (std::size_t i = 0; i < k; ++i) {
    taps[i] = static_cast<float>(1.0 - std::abs(static_cast<double>(i) - center) / factor);
  }
  ConvParams p;
  p.weights = Tensor({channels, 1, k, k});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t x = 0; x < k; ++x) p.weights[(c * k + y) * k + x] = taps[y] * taps[x];
    }
  }
  p.bias = Tensor({channels});
  p.stride = factor;
  p.padding = (factor - 1 + 1) / 2;  // ceil((factor - 1) / 2)
  p.groups = static_cast<int>(channels);
  return p;
}

Tensor upsample_nearest(const Tensor& input, int factor) {
  if (factor <= 0) throw InvalidArgument("upsample factor must be positive");
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t c = input.channels(), h = input.height(), w = input.width();
  Tensor out = Tensor::chw(c, h * f, w * f);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(c); ++ci) {
    const auto ch = static_cast<std::size_t>(ci);
    for (std::size_t y = 0; y < h * f; ++y) {
      for (std::size_t x = 0; x < w * f; ++x) {
        out.at(ch, y, x) = input.data()[(ch * h + y / f) * w + x / f];
      }
    }
  }
  return out;
}

Tensor maxpool(const Tensor& input, int kernel, int stride) {
  if (kernel <= 0 || stride <= 0) throw InvalidArgument("maxpool kernel and stride must be positive");
  const std::size_t c = input.channels(), h = input.height(), w = input.width();
  const auto k = static_cast<std::size_t>(kernel), s = static_cast<std::size_t>(stride);
  if (h < k || w < k) throw InvalidArgument("maxpool window larger than input");
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  Tensor out = Tensor::chw(c, oh, ow);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(c); ++ci) {
    const auto ch = static_cast<std::size_t>(ci);
    const float* src = input.data().data() + ch * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float m = src[oy * s * w + ox * s];
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) m = std::max(m, src[(oy * s + ky) * w + ox * s + kx]);
        }
        out.at(ch, oy, ox) = m;
      }
    }
  }
  return out;
}

FusionWeights FusionWeights::clamped() const {
  FusionWeights out = *this;
  for (auto& w : out.top_down) w = std::max(w, 0.0f);
  for (auto& w : out.bottom_up) w = std::max(w, 0.0f);
  return out;
}

BifpnParams BifpnParams::identity(std::size_t levels, std::size_t channels, float weight) {
  BifpnParams p;
  p.weights.top_down.assign(levels, weight);
  p.weights.bottom_up.assign(levels, weight);
  p.top_down_convs.assign(levels, ConvParams::identity(channels));
  p.bottom_up_convs.assign(levels, ConvParams::identity(channels));
  return p;
}

namespace {

// a + b * w, elementwise.
Tensor fused_sum(const Tensor& a, const Tensor& b, float w) {
  Tensor out = a;
  auto dst = out.data();
  const auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * w;
  return out;
}

}  // namespace

std::vector<Tensor> bifpn_fuse(const std::vector<Tensor>& pyramid, const BifpnParams& params) {
  const std::size_t n = pyramid.size();
  if (n == 0) throw InvalidArgument("bifpn needs at least one level");
  if (params.weights.top_down.size() != n || params.weights.bottom_up.size() != n ||
      params.top_down_convs.size() != n || params.bottom_up_convs.size() != n) {
    throw InvalidArgument("bifpn parameters do not cover every pyramid level");
  }
  const std::size_t c = pyramid[0].channels();
  for (std::size_t i = 0; i < n; ++i) {
    if (pyramid[i].rank() != 3 || pyramid[i].channels() != c) {
      throw InvalidArgument("bifpn levels must be C x H x W with a uniform channel count");
    }
    if (i > 0 && (pyramid[i - 1].height() != 2 * pyramid[i].height() ||
                  pyramid[i - 1].width() != 2 * pyramid[i].width())) {
      throw InvalidArgument("bifpn level " + std::to_string(i) + " is not half the size of level " +
                            std::to_string(i - 1));
    }
  }
  const FusionWeights w = params.weights.clamped();

  std::vector<Tensor> td(n);
  td[n - 1] = pyramid[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    td[i] = conv2d(fused_sum(pyramid[i], upsample_nearest(td[i + 1], 2), w.top_down[i]),
                   params.top_down_convs[i]);
  }
  std::vector<Tensor> bu(n);
  bu[0] = td[0];
  for (std::size_t i = 1; i < n; ++i) {
    bu[i] = conv2d(fused_sum(td[i], maxpool(bu[i - 1], 2, 2), w.bottom_up[i]),
                   params.bottom_up_convs[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!bu[i].same_shape(pyramid[i])) {
      throw InvalidArgument("bifpn conv at level " + std::to_string(i) + " changed the map shape");
    }
  }
  return bu;
}

NeckOutput simple_neck(const Tensor& coarsest, const SimpleNeckParams& params) {
  if (params.convs.size() != params.ups.size() + 1) {
    throw InvalidArgument("simple neck needs exactly one more conv than upsampling stages");
  }
  NeckOutput out;
  out.tagging = conv2d(coarsest, params.convs[0]);
  Tensor x = out.tagging;
  for (std::size_t i = 0; i < params.ups.size(); ++i) {
    x = conv2d(transposed_conv2d(x, params.ups[i]), params.convs[i + 1]);
  }
  out.dense = std::move(x);
  return out;
}

}  // namespace centerpercept
