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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "centerpercept/encoder.hpp"
#include "centerpercept/oracle.hpp"
#include "test_util.hpp"

namespace centerpercept {
namespace {

const GridSpec kGrid(640, 320, 4);

float at(const Tensor& t, int x, int y) { return t[static_cast<std::size_t>(y) * t.width() + x]; }

TEST(SplatGaussians, Examples) {
  const std::vector<GaussianSpec> one{{{10, 10}, 2.0}};
  const Tensor h = splat_gaussians(one, kGrid);
  EXPECT_FLOAT_EQ(at(h, 10, 10), 1.0f);
  EXPECT_NEAR(at(h, 12, 10), std::exp(-1.0), 1e-6);
  EXPECT_NEAR(at(h, 12, 10), 0.36788, 1e-5);

  const std::vector<GaussianSpec> two{{{5, 5}, 2.0}, {{7, 5}, 2.0}};
  EXPECT_NEAR(at(splat_gaussians(two, kGrid), 6, 5), 0.77880, 1e-5);

  const Tensor empty = splat_gaussians({}, kGrid);
  for (float v : empty.data()) ASSERT_EQ(v, 0.0f);
}

TEST(SplatGaussians, RejectsBadSigma) {
  const std::vector<GaussianSpec> bad{{{3, 3}, 0.0}};
  EXPECT_THROW(splat_gaussians(bad, kGrid), InvalidArgument);
  const std::vector<GaussianSpec> neg{{{3, 3}, -1.0}};
  EXPECT_THROW(splat_gaussians(neg, kGrid), InvalidArgument);
}

TEST(SplatGaussians, WindowedMatchesFullMap) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> ux(0, 159), uy(0, 79);
  std::uniform_real_distribution<double> us(0.5, 8.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GaussianSpec> ks;
    for (int i = 0; i < 12; ++i) ks.push_back({{ux(rng), uy(rng)}, us(rng)});
    const Tensor fast = splat_gaussians(ks, kGrid);
    const Tensor full = ref::splat_gaussians(ks, kGrid);
    ASSERT_LT(testing::max_abs_diff(fast, full), 1e-6);
    for (const auto& k : ks) ASSERT_EQ(at(fast, k.center.x, k.center.y), 1.0f);
  }
}

TEST(CornerSigma, FloorAtIouNearOne) {
  EXPECT_DOUBLE_EQ(corner_sigma(40, 40, 4, 1.0 - 1e-12), 0.5);
}

TEST(CornerSigma, MatchesRadiusSearchOracle) {
  const double r = corner_radius(40, 40, 4, 0.7);
  EXPECT_NEAR(r, oracle::corner_radius_search(40, 40, 4, 0.7), 1e-6);
  EXPECT_NEAR(corner_sigma(40, 40, 4, 0.7), std::max(0.5, r / 3.0), 1e-12);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> us(4.0, 400.0), ut(0.3, 0.95);
  for (int i = 0; i < 300; ++i) {
    const double w = us(rng), h = us(rng), t = ut(rng);
    ASSERT_NEAR(corner_radius(w, h, 4, t), oracle::corner_radius_search(w, h, 4, t), 1e-6)
        << w << " " << h << " " << t;
  }
}

TEST(CornerSigma, MonotoneInSize) {
  EXPECT_GT(corner_sigma(80, 80, 4, 0.7), corner_sigma(40, 40, 4, 0.7));
}

TEST(CornerSigma, RejectsDegenerateBox) {
  EXPECT_THROW(corner_sigma(0, 10, 4, 0.7), InvalidArgument);
  EXPECT_THROW(corner_sigma(10, -1, 4, 0.7), InvalidArgument);
}

TEST(EncodeDetections, OffsetsAtCenter) {
  const std::vector<BoundingBoxAnn> boxes{{32, 68, 48, 92, 0, false, 1.0}};
  const auto t = encode_detections(boxes, kGrid);
  EXPECT_EQ(box_center_cell(boxes[0], kGrid), (Cell{10, 20}));
  EXPECT_FLOAT_EQ(t.offsets.at(0, 20, 10), 2.0f);
  EXPECT_FLOAT_EQ(t.offsets.at(1, 20, 10), 3.0f);
  EXPECT_FLOAT_EQ(t.offsets.at(2, 20, 10), -2.0f);
  EXPECT_FLOAT_EQ(t.offsets.at(3, 20, 10), -3.0f);
  EXPECT_FLOAT_EQ(t.heatmaps.at(0, 20, 10), 1.0f);
  EXPECT_TRUE(t.center_mask.test(20, 10));
  EXPECT_EQ(t.center_mask.count(), 1u);
  EXPECT_EQ(t.occlusion.at(0, 20, 10), 0.0f);
}

TEST(EncodeDetections, OcclusionFlag) {
  const std::vector<BoundingBoxAnn> boxes{{32, 68, 48, 92, 4, true, 1.0}};
  EXPECT_EQ(encode_detections(boxes, kGrid).occlusion.at(0, 20, 10), 1.0f);
}

TEST(EncodeDetections, OverlappingGaussiansTakeMax) {
  const std::vector<BoundingBoxAnn> boxes{{20, 20, 60, 60, 3, false, 1.0}, {36, 20, 76, 60, 3, false, 1.0}};
  const auto t = encode_detections(boxes, kGrid);
  std::vector<GaussianSpec> ks;
  for (const auto& b : boxes) ks.push_back({box_center_cell(b, kGrid), corner_sigma(b.width(), b.height(), 4, 0.7)});
  const Tensor a = splat_gaussians(std::span(ks).subspan(0, 1), kGrid);
  const Tensor b = splat_gaussians(std::span(ks).subspan(1, 1), kGrid);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(t.heatmaps.plane(3)[i], std::max(a[i], b[i]));
}

TEST(EncodeDetections, CollisionLargerBoxOwnsOffsets) {
  const std::vector<BoundingBoxAnn> boxes{{38, 78, 42, 82, 1, true, 1.0}, {20, 60, 60, 100, 2, false, 1.0}};
  const auto t = encode_detections(boxes, kGrid);
  EXPECT_FLOAT_EQ(t.offsets.at(0, 20, 10), 5.0f);
  EXPECT_EQ(t.occlusion.at(0, 20, 10), 0.0f);
  EXPECT_EQ(t.heatmaps.at(1, 20, 10), 1.0f);
  EXPECT_EQ(t.heatmaps.at(2, 20, 10), 1.0f);
}

TEST(EncodeDetections, RejectsBadClass) {
  const std::vector<BoundingBoxAnn> boxes{{32, 68, 48, 92, 10, false, 1.0}};
  EXPECT_THROW(encode_detections(boxes, kGrid), InvalidArgument);
}

TEST(EncodeDetections, OffsetsInvertToCorners) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(0, 600), uy(0, 280), us(4, 40);
  for (int i = 0; i < 500; ++i) {
    BoundingBoxAnn b;
    b.x1 = ux(rng);
    b.y1 = uy(rng);
    b.x2 = b.x1 + us(rng);
    b.y2 = b.y1 + us(rng);
    const auto t = encode_detections(std::span(&b, 1), kGrid);
    const Cell c = box_center_cell(b, kGrid);
    ASSERT_NEAR((c.x - t.offsets.at(0, c.y, c.x)) * 4.0, b.x1, 1e-3);
    ASSERT_NEAR((c.y - t.offsets.at(1, c.y, c.x)) * 4.0, b.y1, 1e-3);
    ASSERT_NEAR((c.x - t.offsets.at(2, c.y, c.x)) * 4.0, b.x2, 1e-3);
    ASSERT_NEAR((c.y - t.offsets.at(3, c.y, c.x)) * 4.0, b.y2, 1e-3);
  }
}

TEST(EncodeDetections, Deterministic) {
  const std::vector<BoundingBoxAnn> boxes{{10, 10, 90, 50, 2, true, 1.0}, {300, 100, 330, 200, 0, false, 1.0}};
  const auto a = encode_detections(boxes, kGrid);
  const auto b = encode_detections(boxes, kGrid);
  EXPECT_EQ(a.heatmaps, b.heatmaps);
  EXPECT_EQ(a.offsets, b.offsets);
  EXPECT_EQ(a.center_mask, b.center_mask);
}

TEST(ResamplePolyline, Examples) {
  const std::vector<Point2> seg{{0, 0}, {0, 100}};
  const auto r = resample_polyline(seg, 10);
  ASSERT_EQ(r.size(), 11u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(r[i].y, 10.0 * i, 1e-9);
    EXPECT_NEAR(r[i].x, 0.0, 1e-12);
  }
  const std::vector<Point2> short_seg{{0, 0}, {6, 0}};
  const auto s = resample_polyline(short_seg, 10);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], short_seg[0]);
  EXPECT_EQ(s[1], short_seg[1]);
}

TEST(ResamplePolyline, CollinearBezierEqualsSegment) {
  const std::vector<Point2> control{{0, 0}, {0, 30}, {0, 70}, {0, 100}};
  const auto bez = resample_polyline(flatten_cubic_bezier(control), 10);
  const auto seg = resample_polyline(std::vector<Point2>{{0, 0}, {0, 100}}, 10);
  ASSERT_EQ(bez.size(), seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    EXPECT_NEAR(bez[i].x, seg[i].x, 1e-9);
    EXPECT_NEAR(bez[i].y, seg[i].y, 1e-9);
  }
}

TEST(ResamplePolyline, Errors) {
  EXPECT_THROW(resample_polyline(std::vector<Point2>{{1, 1}}, 10), InvalidArgument);
  EXPECT_THROW(resample_polyline(std::vector<Point2>{{1, 1}, {2, 2}}, 0), InvalidArgument);
  EXPECT_THROW(flatten_cubic_bezier(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}}), InvalidArgument);
}

TEST(MergeLaneEdges, Examples) {
  const std::vector<Point2> a{{10, 0}, {10, 100}}, b{{14, 100}, {14, 0}};
  for (const auto& p : merge_lane_edges(a, b)) EXPECT_NEAR(p.x, 12.0, 1e-12);
  const auto same = merge_lane_edges(a, a);
  const auto ra = resample_polyline(a, 10);
  ASSERT_EQ(same.size(), ra.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_NEAR(same[i].x, ra[i].x, 1e-12);
    EXPECT_NEAR(same[i].y, ra[i].y, 1e-9);
  }
  EXPECT_THROW(merge_lane_edges(a, std::vector<Point2>{{1, 1}, {1, 1}}), InvalidArgument);
}

TEST(MergeLaneEdges, ParallelCurvesGiveMidCurve) {
  // x = f(y) +- d sampled densely in y; midpoints of index-paired samples
  // lie on f at the paired y, up to the chord error f'' h^2 / 8 = 2.5e-6
  // of linear interpolation between the dense samples.
  const auto f = [](double y) { return 200.0 + 0.3 * y + 0.001 * y * y; };
  const double d = 5.0;
  std::vector<Point2> a, b;
  for (int i = 0; i <= 2000; ++i) {
    const double y = 0.1 * i;
    a.push_back({f(y) - d, y});
    b.push_back({f(y) + d, y});
  }
  const auto mid = merge_lane_edges(a, b);
  for (const auto& p : mid) ASSERT_NEAR(p.x, f(p.y), 2.5e-6 + 1e-9);
}

TEST(EncodeLanes, MidpointOffsets) {
  // Keypoints at x = 20 px, y = 0, 10, ..., 100 px -> 11 cells, midpoint index 5.
  const std::vector<LaneInstance> lanes{{2, {{20, 0}, {20, 100}}}};
  const auto t = encode_lanes(lanes, kGrid);
  const auto kps = lane_keypoints(lanes[0], kGrid);
  ASSERT_EQ(lane_midpoint_index(kps.size()), kps.size() / 2);
  const Cell mid = kps[kps.size() / 2];
  for (const Cell& p : kps) {
    EXPECT_TRUE(t.kp_mask.test(p.y, p.x));
    EXPECT_EQ(t.offsets.at(0, p.y, p.x), static_cast<float>(mid.x - p.x));
    EXPECT_EQ(t.offsets.at(1, p.y, p.x), static_cast<float>(mid.y - p.y));
    EXPECT_EQ(t.heatmaps.at(2, p.y, p.x), 1.0f);
  }
  EXPECT_EQ(t.offsets.at(0, mid.y, mid.x), 0.0f);
  EXPECT_EQ(t.offsets.at(1, mid.y, mid.x), 0.0f);
  EXPECT_EQ(t.kp_mask.count(), kps.size());
}

TEST(EncodeLanes, MidpointIndex) {
  EXPECT_EQ(lane_midpoint_index(5), 2u);
  EXPECT_EQ(lane_midpoint_index(4), 2u);
  EXPECT_EQ(lane_midpoint_index(2), 1u);
}

TEST(EncodeLanes, OffsetIsMidpointMinusKeypoint) {
  // A keypoint at (5, 5) of an instance whose midpoint is (8, 9) gets (3, 4).
  const std::vector<LaneInstance> lanes{{0, {{20, 20}, {32, 36}, {44, 52}}}};
  const auto kps = lane_keypoints(lanes[0], kGrid, 20.0);
  ASSERT_EQ(kps.size(), 3u);
  ASSERT_EQ(kps[0], (Cell{5, 5}));
  ASSERT_EQ(kps[1], (Cell{8, 9}));
  EncoderConfig cfg;
  cfg.lane_pace = 20.0;
  const auto t = encode_lanes(lanes, kGrid, cfg);
  EXPECT_EQ(t.offsets.at(0, 5, 5), 3.0f);
  EXPECT_EQ(t.offsets.at(1, 5, 5), 4.0f);
}

TEST(EncodeLanes, LastWriterWinsOnCollision) {
  const std::vector<LaneInstance> lanes{{0, {{40, 0}, {40, 200}}}, {1, {{0, 100}, {200, 100}}}};
  const auto t = encode_lanes(lanes, kGrid);
  const auto second = lane_keypoints(lanes[1], kGrid);
  const Cell mid = second[second.size() / 2];
  EXPECT_EQ(t.offsets.at(0, 25, 10), static_cast<float>(mid.x - 10));
  EXPECT_EQ(t.offsets.at(1, 25, 10), static_cast<float>(mid.y - 25));
}

TEST(EncodeLanes, RejectsBadClass) {
  const std::vector<LaneInstance> lanes{{8, {{0, 0}, {0, 100}}}};
  EXPECT_THROW(encode_lanes(lanes, kGrid), InvalidArgument);
}

TEST(EncodeLanes, HeatmapsInUnitRange) {
  const std::vector<LaneInstance> lanes{{0, {{0, 0}, {600, 300}}}, {0, {{300, 10}, {10, 300}}}};
  const auto t = encode_lanes(lanes, kGrid);
  for (float v : t.heatmaps.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

}  // namespace
}  // namespace centerpercept
