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

#include "centerpercept/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace centerpercept::oracle {

std::vector<Cell> peaks_exhaustive(std::span<const float> plane, std::size_t height, std::size_t width,
                                   double threshold) {
  std::vector<Cell> out;
  const auto h = static_cast<long>(height), w = static_cast<long>(width);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const float v = plane[static_cast<std::size_t>(y * w + x)];
      if (!(v >= static_cast<float>(threshold))) continue;
      bool peak = true;
      for (long dy = -1; dy <= 1 && peak; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (plane[static_cast<std::size_t>(yy * w + xx)] > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) out.push_back({static_cast<int>(x), static_cast<int>(y)});
    }
  }
  return out;
}

double assignment_bruteforce(const std::vector<std::vector<double>>& cost) {
  if (cost.empty() || cost[0].empty()) return 0.0;
  const std::size_t rows = cost.size(), cols = cost[0].size();
  const bool by_rows = rows <= cols;
  const std::size_t small = by_rows ? rows : cols, large = by_rows ? cols : rows;
  // Enumerate ordered selections of `small` distinct items out of `large`
  // by permuting all `large` items and using the first `small`.
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < small; ++i) total += by_rows ? cost[i][perm[i]] : cost[perm[i]][i];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double assignment_greedy(const std::vector<std::vector<double>>& cost) {
  if (cost.empty() || cost[0].empty()) return 0.0;
  const std::size_t rows = cost.size(), cols = cost[0].size();
  std::vector<bool> row_used(rows), col_used(cols);
  double total = 0.0;
  for (std::size_t k = 0; k < std::min(rows, cols); ++k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (row_used[i]) continue;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!col_used[j] && cost[i][j] < best) {
          best = cost[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    row_used[bi] = col_used[bj] = true;
    total += best;
  }
  return total;
}

namespace {

double box_iou(const BoundingBoxAnn& a, const BoundingBoxAnn& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// TP count when the first `k` ranked predictions are matched greedily.
std::size_t prefix_true_positives(const std::vector<BoundingBoxAnn>& ranked, std::size_t k,
                                  const std::vector<BoundingBoxAnn>& gts, double thresh) {
  std::vector<char> used(gts.size(), 0);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    long best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = box_iou(ranked[i], gts[g]);
      if (!used[g] && v >= thresh && v > best_iou) {
        best_iou = v;
        best = static_cast<long>(g);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = 1;
      ++tp;
    }
  }
  return tp;
}

}  // namespace

double ap_exhaustive(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts,
                     double iou_thresh, std::vector<double>* per_class) {
  if (per_class) per_class->assign(kNumDetClasses, -1.0);
  double sum = 0.0;
  int classes = 0;
  for (int k = 0; k < kNumDetClasses; ++k) {
    std::vector<BoundingBoxAnn> p, g;
    for (const auto& b : preds) {
      if (b.class_id == k) p.push_back(b);
    }
    for (const auto& b : gts) {
      if (b.class_id == k) g.push_back(b);
    }
    if (g.empty()) continue;
    std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    // (recall, precision) after each prefix.
    std::vector<std::pair<double, double>> curve;
    for (std::size_t n = 1; n <= p.size(); ++n) {
      const auto tp = static_cast<double>(prefix_true_positives(p, n, g, iou_thresh));
      curve.emplace_back(tp / static_cast<double>(g.size()), tp / static_cast<double>(n));
    }
    std::vector<double> recalls{0.0};
    for (const auto& [r, pr] : curve) recalls.push_back(r);
    std::sort(recalls.begin(), recalls.end());
    recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());
    double ap = 0.0;
    for (std::size_t i = 1; i < recalls.size(); ++i) {
      double best = 0.0;
      for (const auto& [r, pr] : curve) {
        if (r >= recalls[i]) best = std::max(best, pr);
      }
      ap += (recalls[i] - recalls[i - 1]) * best;
    }
    if (per_class) (*per_class)[k] = ap;
    sum += ap;
    ++classes;
  }
  return classes ? sum / classes : 0.0;
}

namespace {

double ess(const std::vector<std::size_t>& members, std::span<const Point2> pts) {
  double mx = 0.0, my = 0.0;
  for (auto i : members) {
    mx += pts[i].x;
    my += pts[i].y;
  }
  mx /= static_cast<double>(members.size());
  my /= static_cast<double>(members.size());
  double s = 0.0;
  for (auto i : members) s += (pts[i].x - mx) * (pts[i].x - mx) + (pts[i].y - my) * (pts[i].y - my);
  return s;
}

double partition_ess(const std::vector<std::vector<std::size_t>>& part, std::span<const Point2> pts) {
  double s = 0.0;
  for (const auto& c : part) s += ess(c, pts);
  return s;
}

}  // namespace

std::vector<int> ward_partition_search(std::span<const Point2> votes, double dist_threshold) {
  const std::size_t n = votes.size();
  if (n == 0) return {};
  std::vector<std::vector<std::size_t>> part;
  for (std::size_t i = 0; i < n; ++i) part.push_back({i});
  while (part.size() > 1) {
    const double base = partition_ess(part, votes);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> best_part;
    for (std::size_t a = 0; a < part.size(); ++a) {
      for (std::size_t b = a + 1; b < part.size(); ++b) {
        std::vector<std::vector<std::size_t>> cand;
        std::vector<std::size_t> merged = part[a];
        merged.insert(merged.end(), part[b].begin(), part[b].end());
        for (std::size_t c = 0; c < part.size(); ++c) {
          if (c != a && c != b) cand.push_back(part[c]);
        }
        cand.push_back(merged);
        const double total = partition_ess(cand, votes);
        if (total < best) {
          best = total;
          best_part = std::move(cand);
        }
      }
    }
    const double linkage = std::sqrt(std::max(0.0, 2.0 * (best - base)));
    if (linkage > dist_threshold) break;
    part = std::move(best_part);
  }
  for (auto& c : part) std::sort(c.begin(), c.end());
  std::sort(part.begin(), part.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a.front() < b.front();
  });
  std::vector<int> labels(n);
  for (std::size_t l = 0; l < part.size(); ++l) {
    for (auto i : part[l]) labels[i] = static_cast<int>(l);
  }
  return labels;
}

namespace {

// Does segment a-b meet the box (x0, x1] x (y0, y1]? Liang-Barsky clip
// against the closed box, then reject touches only on the open edges.
bool segment_hits_box(Point2 a, Point2 b, double x0, double x1, double y0, double y1) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const std::array<double, 4> p{-dx, dx, -dy, dy};
  const std::array<double, 4> q{a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
    } else {
      const double t = q[i] / p[i];
      if (p[i] < 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
    }
  }
  if (t0 > t1) return false;
  // Some point of the clipped piece must have x > x0 and y > y0.
  for (double t : {t0, t1, 0.5 * (t0 + t1)}) {
    const double x = a.x + t * dx, y = a.y + t * dy;
    if (x > x0 && y > y0) return true;
  }
  return false;
}

}  // namespace

BinaryMask lane_mask_enumerate(const std::vector<std::vector<Point2>>& polylines, int image_w,
                               int image_h, int line_width) {
  BinaryMask m(image_w, image_h);
  const double half = line_width / 2.0;
  for (int j = 0; j < image_h; ++j) {
    for (int i = 0; i < image_w; ++i) {
      bool hit = false;
      for (const auto& line : polylines) {
        for (std::size_t s = 0; s < line.size() && !hit; ++s) {
          const Point2 a = line[s];
          const Point2 b = s + 1 < line.size() ? line[s + 1] : line[s];
          hit = segment_hits_box(a, b, i - half, i + half, j - half, j + half);
        }
        if (hit) break;
      }
      m.bits[static_cast<std::size_t>(j) * image_w + i] = hit ? 1 : 0;
    }
  }
  return m;
}

namespace {

double loss_term(double h, double hp, double alpha, double beta) {
  const double wt = std::pow(1.0 + h, alpha);
  const double wp = std::pow(1.0 + hp, beta);
  return (wt > wp ? wt : wp) * (h - hp) * (h - hp);
}

}  // namespace

std::vector<double> loss_finite_difference(const Tensor& target, const Tensor& pred,
                                           const HeatmapLossParams& params, double h) {
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    // Every other cell's term is unchanged by the perturbation.
    const double up = loss_term(target[i], static_cast<double>(pred[i]) + h, params.alpha, params.beta);
    const double dn = loss_term(target[i], static_cast<double>(pred[i]) - h, params.alpha, params.beta);
    g[i] = (up - dn) / (2.0 * h) / params.n_k;
  }
  return g;
}

std::vector<bool> loss_tie_cells(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params,
                                 double h, double tie_eps) {
  std::vector<bool> tie(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double wt = std::pow(1.0 + target[i], params.alpha);
    const double p = pred[i];
    const bool lo = wt >= std::pow(1.0 + p - h, params.beta);
    const bool hi = wt >= std::pow(1.0 + p + h, params.beta);
    tie[i] = lo != hi || std::abs(wt - std::pow(1.0 + p, params.beta)) < tie_eps;
  }
  return tie;
}

GradientCheck check_loss_gradient(const Tensor& target, const Tensor& pred, const HeatmapLossParams& params,
                                  double h) {
  const auto fd = loss_finite_difference(target, pred, params, h);
  const auto tie = loss_tie_cells(target, pred, params, h);
  const Tensor g = weighted_l2_grad(target, pred, params);
  GradientCheck r;
  r.loss = weighted_l2_loss(target, pred, params);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (tie[i]) {
      ++r.ties;
      continue;
    }
    ++r.checked;
    const double d = g[i] - fd[i];
    num += d * d;
    den += fd[i] * fd[i];
    r.max_abs_error = std::max(r.max_abs_error, std::abs(d));
  }
  r.rel_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return r;
}

std::pair<Tensor, Tensor> random_loss_case(std::uint64_t seed, std::size_t height, std::size_t width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor target({height, width}), pred({height, width});
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = u(rng) < 0.02 ? 1.0f : static_cast<float>(u(rng));
    pred[i] = static_cast<float>(u(rng));
  }
  return {std::move(target), std::move(pred)};
}

Tensor conv2d_scatter(const Tensor& input, const ConvParams& params) {
  const long c_in = static_cast<long>(input.dim(0)), ih = static_cast<long>(input.dim(1)),
             iw = static_cast<long>(input.dim(2));
  const long c_out = static_cast<long>(params.weights.dim(0)), gin = static_cast<long>(params.weights.dim(1)),
             kh = static_cast<long>(params.weights.dim(2)), kw = static_cast<long>(params.weights.dim(3));
  const long s = params.stride, p = params.padding;
  const long gout = c_out / params.groups;
  const long oh = (ih + 2 * p - kh) / s + 1, ow = (iw + 2 * p - kw) / s + 1;
  std::vector<double> acc(static_cast<std::size_t>(c_out * oh * ow), 0.0);
  for (long oc = 0; oc < c_out; ++oc) {
    const double b = params.bias.empty() ? 0.0 : params.bias[static_cast<std::size_t>(oc)];
    for (long i = 0; i < oh * ow; ++i) acc[static_cast<std::size_t>(oc * oh * ow + i)] = b;
  }
  for (long ic = 0; ic < c_in; ++ic) {
    const long group = ic / gin, icg = ic % gin;
    for (long iy = 0; iy < ih; ++iy) {
      for (long ix = 0; ix < iw; ++ix) {
        const double v = input[static_cast<std::size_t>((ic * ih + iy) * iw + ix)];
        for (long ocg = 0; ocg < gout; ++ocg) {
          const long oc = group * gout + ocg;
          for (long ky = 0; ky < kh; ++ky) {
            const long ny = iy + p - ky;
            if (ny < 0 || ny % s) continue;
            const long oy = ny / s;
            if (oy >= oh) continue;
            for (long kx = 0; kx < kw; ++kx) {
              const long nx = ix + p - kx;
              if (nx < 0 || nx % s) continue;
              const long ox = nx / s;
              if (ox >= ow) continue;
              const double wv = params.weights[static_cast<std::size_t>(((oc * gin + icg) * kh + ky) * kw + kx)];
              acc[static_cast<std::size_t>((oc * oh + oy) * ow + ox)] += wv * v;
            }
          }
        }
      }
    }
  }
  Tensor out({static_cast<std::size_t>(c_out), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return out;
}

Tensor transposed_conv_zero_stuffing(const Tensor& input, const ConvParams& params) {
  const long c_in = static_cast<long>(input.dim(0)), ih = static_cast<long>(input.dim(1)),
             iw = static_cast<long>(input.dim(2));
  const long gout = static_cast<long>(params.weights.dim(1)), kh = static_cast<long>(params.weights.dim(2)),
             kw = static_cast<long>(params.weights.dim(3));
  const long s = params.stride, p = params.padding, groups = params.groups;
  const long gin = c_in / groups, c_out = gout * groups;
  // Stuff s - 1 zeros between samples and pad k - 1 - p on each side.
  const long py = kh - 1 - p, px = kw - 1 - p;
  const long sh = (ih - 1) * s + 1 + 2 * py, sw = (iw - 1) * s + 1 + 2 * px;
  std::vector<double> stuffed(static_cast<std::size_t>(c_in * sh * sw), 0.0);
  for (long c = 0; c < c_in; ++c) {
    for (long y = 0; y < ih; ++y) {
      for (long x = 0; x < iw; ++x) {
        stuffed[static_cast<std::size_t>((c * sh + py + y * s) * sw + px + x * s)] =
            input[static_cast<std::size_t>((c * ih + y) * iw + x)];
      }
    }
  }
  const long oh = sh - kh + 1, ow = sw - kw + 1;
  Tensor out({static_cast<std::size_t>(c_out), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  for (long oc = 0; oc < c_out; ++oc) {
    const long group = oc / gout, ocg = oc % gout;
    for (long oy = 0; oy < oh; ++oy) {
      for (long ox = 0; ox < ow; ++ox) {
        double acc = params.bias.empty() ? 0.0 : params.bias[static_cast<std::size_t>(oc)];
        for (long icg = 0; icg < gin; ++icg) {
          const long ic = group * gin + icg;
          for (long ky = 0; ky < kh; ++ky) {
            for (long kx = 0; kx < kw; ++kx) {
              const double wv = params.weights[static_cast<std::size_t>(
                  ((ic * gout + ocg) * kh + (kh - 1 - ky)) * kw + (kw - 1 - kx))];
              acc += wv * stuffed[static_cast<std::size_t>((ic * sh + oy + ky) * sw + ox + kx)];
            }
          }
        }
        out[static_cast<std::size_t>((oc * oh + oy) * ow + ox)] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor bilinear_upsample(const Tensor& input, int factor) {
  const long c = static_cast<long>(input.dim(0)), h = static_cast<long>(input.dim(1)),
             w = static_cast<long>(input.dim(2));
  const long oh = h * factor, ow = w * factor;
  Tensor out({static_cast<std::size_t>(c), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  auto src = [&](long ch, long y, long x) {
    y = std::clamp(y, 0L, h - 1);
    x = std::clamp(x, 0L, w - 1);
    return static_cast<double>(input[static_cast<std::size_t>((ch * h + y) * w + x)]);
  };
  for (long ch = 0; ch < c; ++ch) {
    for (long oy = 0; oy < oh; ++oy) {
      const double u = (oy + 0.5) / factor - 0.5;
      const long y0 = static_cast<long>(std::floor(u));
      const double ty = u - y0;
      for (long ox = 0; ox < ow; ++ox) {
        const double v = (ox + 0.5) / factor - 0.5;
        const long x0 = static_cast<long>(std::floor(v));
        const double tx = v - x0;
        const double val = (1 - ty) * ((1 - tx) * src(ch, y0, x0) + tx * src(ch, y0, x0 + 1)) +
                           ty * ((1 - tx) * src(ch, y0 + 1, x0) + tx * src(ch, y0 + 1, x0 + 1));
        out[static_cast<std::size_t>((ch * oh + oy) * ow + ox)] = static_cast<float>(val);
      }
    }
  }
  return out;
}

Tensor maxpool_window_scan(const Tensor& input, int kernel, int stride) {
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t k = static_cast<std::size_t>(kernel), s = static_cast<std::size_t>(stride);
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t y = oy * s; y < oy * s + k; ++y) {
          for (std::size_t x = ox * s; x < ox * s + k; ++x) m = std::max(m, input[(ch * h + y) * w + x]);
        }
        out[(ch * oh + oy) * ow + ox] = m;
      }
    }
  }
  return out;
}

std::vector<Tensor> bifpn_two_pass(const std::vector<Tensor>& pyramid, const BifpnParams& params) {
  const std::size_t n = pyramid.size();
  auto axpy = [](Tensor a, const Tensor& b, float w) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i] * w;
    return a;
  };
  auto nonneg = [](float w) { return w < 0.0f ? 0.0f : w; };
  std::vector<Tensor> t(n), b(n);
  for (std::size_t k = n; k-- > 0;) {
    if (k == n - 1) {
      t[k] = pyramid[k];
    } else {
      t[k] = ref::conv2d(axpy(pyramid[k], upsample_nearest(t[k + 1], 2), nonneg(params.weights.top_down[k])),
                         params.top_down_convs[k]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0) {
      b[k] = t[k];
    } else {
      b[k] = ref::conv2d(axpy(t[k], maxpool(b[k - 1], 2, 2), nonneg(params.weights.bottom_up[k])),
                         params.bottom_up_convs[k]);
    }
  }
  return b;
}

namespace {

double shifted_iou(double w, double h, const std::array<double, 4>& d) {
  const double x1 = d[0], y1 = d[1], x2 = w + d[2], y2 = h + d[3];
  if (x2 <= x1 || y2 <= y1) return 0.0;
  const double ix = std::max(0.0, std::min(w, x2) - std::max(0.0, x1));
  const double iy = std::max(0.0, std::min(h, y2) - std::max(0.0, y1));
  const double inter = ix * iy;
  return inter / (w * h + (x2 - x1) * (y2 - y1) - inter);
}

double worst_iou(double w, double h, double r) {
  double worst = 1.0;
  const std::array<double, 3> steps{-r, 0.0, r};
  for (double a : steps)
    for (double b : steps)
      for (double c : steps)
        for (double d : steps) worst = std::min(worst, shifted_iou(w, h, {a, b, c, d}));
  return worst;
}

}  // namespace

double corner_radius_search(double box_w, double box_h, int stride, double min_iou) {
  const double w = box_w / stride, h = box_h / stride;
  double lo = 0.0, hi = std::min(w, h);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (worst_iou(w, h, mid) >= min_iou) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace centerpercept::oracle
