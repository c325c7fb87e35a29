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

#include "centerpercept/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace centerpercept {

double iou_box(const BoundingBoxAnn& a, const BoundingBoxAnn& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double all_point_ap(std::vector<ScoredHit> hits, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::stable_sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return !a.true_positive && b.true_positive;
  });
  std::vector<double> precision(hits.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i].true_positive ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Monotone envelope, then sum precision at each recall step.
  for (std::size_t i = hits.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].true_positive) ap += precision[i];
  }
  return ap / static_cast<double>(n_gt);
}

std::vector<bool> greedy_match(std::span<const BoundingBoxAnn> preds,
                               std::span<const BoundingBoxAnn> gts, double iou_thresh) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> tp(preds.size(), false);
  for (std::size_t pi : order) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou_box(preds[pi], gts[g]);
      if (v >= iou_thresh && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      taken[best_gt] = true;
      tp[pi] = true;
    }
  }
  return tp;
}

void ApAccumulator::add_image(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts) {
  for (int k = 0; k < kNumDetClasses; ++k) {
    std::vector<BoundingBoxAnn> p, g;
    for (const auto& b : preds) {
      if (b.class_id == k) p.push_back(b);
    }
    for (const auto& b : gts) {
      if (b.class_id == k) g.push_back(b);
    }
    n_gt_[k] += g.size();
    const auto tp = greedy_match(p, g, iou_thresh_);
    for (std::size_t i = 0; i < p.size(); ++i) hits_[k].push_back({p[i].score, tp[i]});
  }
}

void ApAccumulator::merge(const ApAccumulator& other) {
  for (int k = 0; k < kNumDetClasses; ++k) {
    hits_[k].insert(hits_[k].end(), other.hits_[k].begin(), other.hits_[k].end());
    n_gt_[k] += other.n_gt_[k];
  }
}

ApResult ApAccumulator::result() const {
  ApResult r;
  double sum = 0.0;
  for (int k = 0; k < kNumDetClasses; ++k) {
    if (n_gt_[k] == 0) continue;
    r.per_class[k] = all_point_ap(hits_[k], n_gt_[k]);
    sum += *r.per_class[k];
    ++r.classes_with_gt;
  }
  r.map = r.classes_with_gt ? sum / static_cast<double>(r.classes_with_gt) : 0.0;
  return r;
}

ApResult average_precision(std::span<const BoundingBoxAnn> preds, std::span<const BoundingBoxAnn> gts,
                           double iou_thresh) {
  ApAccumulator acc(iou_thresh);
  acc.add_image(preds, gts);
  return acc.result();
}

std::vector<std::pair<std::size_t, std::size_t>> min_cost_assignment(
    const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost[0].size();
  for (const auto& r : cost) {
    if (r.size() != cols) throw InvalidArgument("cost matrix rows differ in length");
  }
  if (cols == 0) return {};
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;  // n <= m
  const std::size_t m = transposed ? rows : cols;
  auto c = [&](std::size_t i, std::size_t j) { return transposed ? cost[j][i] : cost[i][j]; };

  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed) {
      out.emplace_back(j - 1, p[j] - 1);
    } else {
      out.emplace_back(p[j] - 1, j - 1);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BoxMatch> match_min_weight(std::span<const BoundingBoxAnn> preds,
                                       std::span<const BoundingBoxAnn> gts, double iou_floor) {
  if (preds.empty() || gts.empty()) return {};
  std::vector<std::vector<double>> cost(preds.size(), std::vector<double>(gts.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) cost[i][j] = 1.0 - iou_box(preds[i], gts[j]);
  }
  std::vector<BoxMatch> out;
  for (const auto& [i, j] : min_cost_assignment(cost)) {
    const double v = 1.0 - cost[i][j];
    if (v >= iou_floor) out.push_back({i, j, v});
  }
  return out;
}

OcclusionAccuracy occlusion_accuracy(std::span<const BoxMatch> matches, const std::vector<bool>& pred_flags,
                                     const std::vector<bool>& gt_flags) {
  OcclusionAccuracy r;
  for (const auto& m : matches) {
    if (m.pred >= pred_flags.size() || m.gt >= gt_flags.size()) {
      throw InvalidArgument("match index outside flag list");
    }
    ++r.matched;
    if (pred_flags[m.pred] == gt_flags[m.gt]) ++r.agreed;
  }
  r.accuracy = r.matched ? static_cast<double>(r.agreed) / static_cast<double>(r.matched) : 1.0;
  return r;
}

void OcclusionAccumulator::add_image(std::span<const BoundingBoxAnn> preds,
                                     std::span<const BoundingBoxAnn> gts) {
  for (int k = 0; k < kNumDetClasses; ++k) {
    std::vector<BoundingBoxAnn> p, g;
    std::vector<bool> pf, gf;
    for (const auto& b : preds) {
      if (b.class_id == k) {
        p.push_back(b);
        pf.push_back(b.occluded);
      }
    }
    for (const auto& b : gts) {
      if (b.class_id == k) {
        g.push_back(b);
        gf.push_back(b.occluded);
      }
    }
    const auto r = occlusion_accuracy(match_min_weight(p, g, iou_floor_), pf, gf);
    matched_ += r.matched;
    agreed_ += r.agreed;
  }
}

void OcclusionAccumulator::merge(const OcclusionAccumulator& other) {
  matched_ += other.matched_;
  agreed_ += other.agreed_;
}

OcclusionAccuracy OcclusionAccumulator::result() const {
  OcclusionAccuracy r;
  r.matched = matched_;
  r.agreed = agreed_;
  r.accuracy = matched_ ? static_cast<double>(agreed_) / static_cast<double>(matched_) : 1.0;
  return r;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

int default_lane_width(int image_w) {
  return std::max(1, static_cast<int>(std::lround(defaults::kLaneWidthAt1280 * image_w / 1280.0)));
}

namespace {

void stamp(BinaryMask& m, double px, double py, double half) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(px - half)));
  const int x1 = std::min(m.width, static_cast<int>(std::ceil(px + half)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(py - half)));
  const int y1 = std::min(m.height, static_cast<int>(std::ceil(py + half)));
  for (int y = y0; y < y1; ++y) {
    std::uint8_t* row = m.bits.data() + static_cast<std::size_t>(y) * m.width;
    for (int x = x0; x < x1; ++x) row[x] = 1;
  }
}

}  // namespace

BinaryMask rasterize_lanes(const std::vector<std::vector<Point2>>& polylines, int image_w, int image_h,
                           int line_width) {
  if (line_width <= 0) throw InvalidArgument("lane line width must be positive");
  if (image_w <= 0 || image_h <= 0) throw InvalidArgument("mask dims must be positive");
  BinaryMask m(image_w, image_h);
  const double half = line_width / 2.0;
  constexpr double kStep = 0.25;
  for (const auto& line : polylines) {
    if (line.empty()) continue;
    stamp(m, line.front().x, line.front().y, half);
    for (std::size_t i = 1; i < line.size(); ++i) {
      const Point2 a = line[i - 1], b = line[i];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / kStep)));
      for (int s = 1; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        stamp(m, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), half);
      }
    }
  }
  return m;
}

double lane_mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) throw InvalidArgument("lane masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void LaneIouAccumulator::add_frame(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) throw InvalidArgument("lane masks differ in size");
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    intersection_ += pred.bits[i] & gt.bits[i];
    union_ += pred.bits[i] | gt.bits[i];
  }
  ++frames_;
}

void LaneIouAccumulator::merge(const LaneIouAccumulator& other) {
  intersection_ += other.intersection_;
  union_ += other.union_;
  frames_ += other.frames_;
}

double LaneIouAccumulator::result() const {
  return union_ == 0 ? 1.0 : static_cast<double>(intersection_) / static_cast<double>(union_);
}

ConfusionAccumulator::ConfusionAccumulator(int n_classes) : n_(n_classes) {
  if (n_classes <= 0) throw InvalidArgument("class count must be positive");
  counts_.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
}

void ConfusionAccumulator::add(int pred, int gt) {
  if (pred < 0 || pred >= n_ || gt < 0 || gt >= n_) throw InvalidArgument("label out of range");
  ++counts_[static_cast<std::size_t>(gt) * n_ + pred];
  ++samples_;
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.n_ != n_) throw InvalidArgument("confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  samples_ += other.samples_;
}

double ConfusionAccumulator::macro_f1() const {
  double sum = 0.0;
  int supported = 0;
  for (int k = 0; k < n_; ++k) {
    std::size_t tp = counts_[static_cast<std::size_t>(k) * n_ + k];
    std::size_t gt_k = 0, pred_k = 0;
    for (int j = 0; j < n_; ++j) {
      gt_k += counts_[static_cast<std::size_t>(k) * n_ + j];
      pred_k += counts_[static_cast<std::size_t>(j) * n_ + k];
    }
    if (gt_k == 0) continue;
    ++supported;
    const double p = pred_k ? static_cast<double>(tp) / pred_k : 0.0;
    const double r = static_cast<double>(tp) / gt_k;
    sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return supported ? sum / supported : 0.0;
}

double f1_multiclass(std::span<const int> preds, std::span<const int> gts, int n_classes) {
  if (preds.size() != gts.size()) throw InvalidArgument("prediction and label counts differ");
  ConfusionAccumulator acc(n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], gts[i]);
  return acc.macro_f1();
}

}  // namespace centerpercept
