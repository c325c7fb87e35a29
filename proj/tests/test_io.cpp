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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "centerpercept/annotation_io.hpp"
#include "centerpercept/pipeline.hpp"
#include "centerpercept/synth.hpp"
#include "centerpercept/tensor_io.hpp"
#include "test_util.hpp"

namespace centerpercept {
namespace {

namespace fs = std::filesystem;
using io::SchemaError;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("centerpercept_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CENTERPERCEPT_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(TensorFile, RoundTripIsBitExact) {
  for (const auto& shape : std::vector<std::vector<std::size_t>>{{}, {0}, {5}, {3, 4}, {2, 3, 7}}) {
    Tensor t = shape.empty() ? Tensor({}, 1.5f) : testing::random_tensor(shape, 9, -1e3, 1e3);
    const auto bytes = io::encode_tensor(t);
    EXPECT_EQ(io::decode_tensor(bytes), t);
  }
  const fs::path dir = scratch("tns");
  const Tensor t = testing::random_tensor({2, 8, 8}, 3);
  io::write_tensor_file(dir / "a.tns", t);
  EXPECT_EQ(io::read_tensor_file(dir / "a.tns"), t);
}

TEST(TensorFile, HeaderLayout) {
  const auto bytes = io::encode_tensor(Tensor({2, 3}, 1.0f));
  ASSERT_EQ(bytes.size(), 8u + 16u + 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TNS1");
  EXPECT_EQ(bytes[4], 0);
  EXPECT_EQ(bytes[5], 2);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[16], 3);
  // 1.0f = 0x3f800000, little-endian.
  EXPECT_EQ(bytes[24], 0x00);
  EXPECT_EQ(bytes[27], 0x3f);
}

TEST(TensorFile, ErrorsCarryByteOffsets) {
  auto good = io::encode_tensor(Tensor({2, 2}, 0.5f));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_NE(error_of([&] { io::decode_tensor(bad_magic, "m"); }).find("m: byte 0"), std::string::npos);

  auto bad_dtype = good;
  bad_dtype[4] = 7;
  EXPECT_NE(error_of([&] { io::decode_tensor(bad_dtype); }).find("byte 4"), std::string::npos);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_NE(error_of([&] { io::decode_tensor(truncated); }).find("payload"), std::string::npos);

  auto nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 24 + 8, &q, 4);
  EXPECT_NE(error_of([&] { io::decode_tensor(nan); }).find("byte 32: non-finite"), std::string::npos);

  EXPECT_FALSE(error_of([&] { io::decode_tensor(std::vector<std::uint8_t>{'T', 'N'}); }).empty());
}

constexpr const char* kDoc = R"([
  {"name": "f0", "width": 640, "height": 320,
   "tags": {"weather": "clear", "scene": "highway", "timeofday": "night"},
   "boxes": [{"x1": 10, "y1": 10, "x2": 50, "y2": 50, "category": "car", "occluded": true}],
   "lanes": [{"category": "single white", "points": [[100, 300], [120, 200], [140, 100]]}]}
])";

TEST(Annotations, ParseAndRoundTrip) {
  const auto frames = io::parse_frames(kDoc);
  ASSERT_EQ(frames.size(), 1u);
  const auto& f = frames[0];
  EXPECT_EQ(f.name, "f0");
  ASSERT_TRUE(f.tags.has_value());
  EXPECT_EQ(f.tags->weather, 2);
  EXPECT_EQ(f.tags->scene, 6);
  EXPECT_EQ(f.tags->time_of_day, 1);
  ASSERT_EQ(f.boxes.size(), 1u);
  EXPECT_EQ(f.boxes[0].class_id, 2);
  EXPECT_TRUE(f.boxes[0].occluded);
  ASSERT_EQ(f.lanes.size(), 1u);
  EXPECT_EQ(f.lanes[0].class_id, 6);
  EXPECT_EQ(f.lanes[0].points.size(), 3u);

  const auto again = io::parse_frames(io::frames_to_json(frames));
  EXPECT_EQ(io::frames_to_json(again), io::frames_to_json(frames));
}

TEST(Annotations, SyntaxErrorReportsLineAndColumn) {
  const std::string msg = error_of([] { io::parse_frames("[\n  {\"name\": }\n]", "doc.json"); });
  EXPECT_NE(msg.find("doc.json"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Annotations, StructuralErrorsReportPath) {
  auto doc = nlohmann::json::parse(kDoc);
  doc[0]["boxes"][0]["x2"] = 5;
  EXPECT_NE(error_of([&] { io::parse_frames(doc.dump()); }).find("$[0].boxes[0]"), std::string::npos);

  doc = nlohmann::json::parse(kDoc);
  doc[0]["boxes"][0]["category"] = "spaceship";
  EXPECT_NE(error_of([&] { io::parse_frames(doc.dump()); }).find("$[0].boxes[0].category"), std::string::npos);

  doc = nlohmann::json::parse(kDoc);
  doc[0]["lanes"][0]["points"][1] = {1};
  EXPECT_NE(error_of([&] { io::parse_frames(doc.dump()); }).find("$[0].lanes[0].points[1]"), std::string::npos);

  doc = nlohmann::json::parse(kDoc);
  doc.push_back(doc[0]);
  EXPECT_NE(error_of([&] { io::parse_frames(doc.dump()); }).find("duplicate"), std::string::npos);

  doc = nlohmann::json::parse(kDoc);
  doc[0]["name"] = "../escape";
  EXPECT_FALSE(error_of([&] { io::parse_frames(doc.dump()); }).empty());

  EXPECT_FALSE(error_of([] { io::parse_frames("{}"); }).empty());
}

TEST(Pipeline, TensorShapesAndTags) {
  SceneConfig cfg;
  cfg.seed = 11;
  cfg.n_lanes_min = 1;
  const Scene s = generate_scene(cfg);
  const GridSpec grid(s.width, s.height, 4);
  const auto ft = io::bundle_to_tensors("x", ideal_outputs(s, grid), s.tags);
  EXPECT_EQ(ft.det_heatmaps.shape(), (std::vector<std::size_t>{10, 80, 160}));
  EXPECT_EQ(ft.det_offsets.shape(), (std::vector<std::size_t>{4, 80, 160}));
  EXPECT_EQ(ft.occlusion.shape(), (std::vector<std::size_t>{1, 80, 160}));
  EXPECT_EQ(ft.lane_heatmaps.shape(), (std::vector<std::size_t>{8, 80, 160}));
  EXPECT_EQ(ft.lane_offsets.shape(), (std::vector<std::size_t>{2, 80, 160}));
  ASSERT_TRUE(ft.tags.has_value());
  EXPECT_EQ(ft.tags->size(), io::kTagLogits);
  EXPECT_EQ(io::tags_from_tensor(*ft.tags), s.tags);

  const fs::path dir = scratch("frames");
  io::write_frame_tensors(dir, ft);
  const auto back = io::read_frame_tensors(dir, "x");
  EXPECT_EQ(back.det_heatmaps, ft.det_heatmaps);
  EXPECT_EQ(back.lane_offsets, ft.lane_offsets);
  EXPECT_EQ(io::list_frames(dir), std::vector<std::string>{"x"});
  fs::remove(io::head_path(dir, "x", "occlusion"));
  EXPECT_THROW(io::read_frame_tensors(dir, "x"), SchemaError);
}

TEST(Pipeline, EvaluateRejectsUnknownPredictionFrames) {
  auto gts = io::parse_frames(kDoc);
  auto preds = gts;
  preds[0].name = "other";
  EXPECT_THROW(io::evaluate(preds, gts), SchemaError);
  const auto empty = io::evaluate({}, gts);
  EXPECT_EQ(empty.ap.map, 0.0);
  EXPECT_EQ(empty.frames, 1u);
}

TEST(Cli, EndToEndRoundTrip) {
  const fs::path dir = scratch("cli");
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("synth --out " + d + "/gt.json --count 6 --seed 21 --lanes-min 1"), 0);
  ASSERT_EQ(run_cli("encode --ann " + d + "/gt.json --out " + d + "/tns"), 0);
  ASSERT_EQ(run_cli("decode --tensors " + d + "/tns --out " + d + "/pred.json"), 0);
  ASSERT_EQ(run_cli("eval --pred " + d + "/pred.json --gt " + d + "/gt.json --out " + d + "/report.json"), 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_NEAR(report["map50"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(report["occlusion_accuracy"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(report["f1_weather"].get<double>(), 1.0, 1e-9);
  EXPECT_GT(report["lane_iou"].get<double>(), 0.5);
  EXPECT_EQ(report["frames"].get<int>(), 6);
  ASSERT_EQ(run_cli("viz --ann " + d + "/gt.json --pred " + d + "/pred.json --out " + d + "/viz"), 0);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli_codes");
  {
    std::ofstream(dir / "bad.json") << "[{\"name\": ";
  }
  EXPECT_EQ(run_cli("encode --ann " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(run_cli("eval --pred " + (dir / "missing.json").string() + " --gt " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("losscheck --count 3 --size 16"), 0);
  EXPECT_EQ(run_cli("losscheck --count 2 --size 16 --tol 1e-30"), 1);
  EXPECT_NE(run_cli("no-such-command"), 0);
}

TEST(Cli, ConfigFileWithExplicitOverride) {
  const fs::path dir = scratch("cli_config");
  {
    std::ofstream(dir / "cfg.json") << R"({"count": 2, "seed": 5, "boxes-min": 0, "boxes-max": 0})";
  }
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("synth --config " + d + "/cfg.json --out " + d + "/a.json"), 0);
  auto a = io::read_frames_file(dir / "a.json");
  EXPECT_EQ(a.size(), 2u);
  for (const auto& f : a) EXPECT_TRUE(f.boxes.empty());
  ASSERT_EQ(run_cli("synth --config " + d + "/cfg.json --count 3 --out " + d + "/b.json"), 0);
  EXPECT_EQ(io::read_frames_file(dir / "b.json").size(), 3u);
  {
    std::ofstream(dir / "bad_cfg.json") << R"({"count": [1]})";
  }
  EXPECT_EQ(run_cli("synth --config " + d + "/bad_cfg.json --out " + d + "/c.json"), 2);
}

}  // namespace
}  // namespace centerpercept
