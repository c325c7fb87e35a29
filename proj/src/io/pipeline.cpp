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


#include "centerpercept/pipeline.hpp"

#include <algorithm>
#include <map>

#include "centerpercept/losses.hpp"
#include "json.hpp"

namespace centerpercept::io {
namespace {

void apply_sigmoid(Tensor& t) {
  for (float& v : t.data()) v = static_cast<float>(sigmoid(v));
}

int argmax(std::span<const float> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::filesystem::path head_path(const std::filesystem::path& dir, const std::string& frame,
                                std::string_view head) {
  return dir / (frame + "." + std::string(head) + ".tns");
}

Tensor tags_to_tensor(const SceneTags& tags) {
  Tensor t({kTagLogits}, 0.0f);
  t[static_cast<std::size_t>(tags.weather)] = 1.0f;
  t[static_cast<std::size_t>(kNumWeather + tags.scene)] = 1.0f;
  t[static_cast<std::size_t>(kNumWeather + kNumScene + tags.time_of_day)] = 1.0f;
  return t;
}

SceneTags tags_from_tensor(const Tensor& logits) {
  if (logits.size() != kTagLogits) {
    throw InvalidArgument("tag head must hold " + std::to_string(kTagLogits) + " values, got " +
                          logits.shape_string());
  }
  const auto d = logits.data();
  return {argmax(d.subspan(0, kNumWeather)), argmax(d.subspan(kNumWeather, kNumScene)),
          argmax(d.subspan(kNumWeather + kNumScene, kNumTimeOfDay))};
}

FrameTensors bundle_to_tensors(const std::string& name, const TargetBundle& bundle,
                               const std::optional<SceneTags>& tags) {
  FrameTensors f;
  f.name = name;
  f.det_heatmaps = bundle.det_heatmaps;
  f.det_offsets = bundle.det_offsets;
  f.occlusion = bundle.occlusion;
  f.lane_heatmaps = bundle.lane_heatmaps;
  f.lane_offsets = bundle.lane_offsets;
  f.center_mask = bundle.center_mask.to_tensor();
  f.lane_kp_mask = bundle.lane_kp_mask.to_tensor();
  if (tags) f.tags = tags_to_tensor(*tags);
  return f;
}

void write_frame_tensors(const std::filesystem::path& dir, const FrameTensors& f) {
  write_tensor_file(head_path(dir, f.name, "det_heatmaps"), f.det_heatmaps);
  write_tensor_file(head_path(dir, f.name, "det_offsets"), f.det_offsets);
  write_tensor_file(head_path(dir, f.name, "occlusion"), f.occlusion);
  write_tensor_file(head_path(dir, f.name, "lane_heatmaps"), f.lane_heatmaps);
  write_tensor_file(head_path(dir, f.name, "lane_offsets"), f.lane_offsets);
  if (f.center_mask) write_tensor_file(head_path(dir, f.name, "center_mask"), *f.center_mask);
  if (f.lane_kp_mask) write_tensor_file(head_path(dir, f.name, "lane_kp_mask"), *f.lane_kp_mask);
  if (f.tags) write_tensor_file(head_path(dir, f.name, "tags"), *f.tags);
}

FrameTensors read_frame_tensors(const std::filesystem::path& dir, const std::string& frame) {
  FrameTensors f;
  f.name = frame;
  const auto required = [&](std::string_view head) {
    const auto p = head_path(dir, frame, head);
    if (!std::filesystem::exists(p)) throw SchemaError(p.string() + ": missing head file");
    return read_tensor_file(p);
  };
  const auto optional = [&](std::string_view head) -> std::optional<Tensor> {
    const auto p = head_path(dir, frame, head);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_tensor_file(p);
  };
  f.det_heatmaps = required("det_heatmaps");
  f.det_offsets = required("det_offsets");
  f.occlusion = required("occlusion");
  f.lane_heatmaps = required("lane_heatmaps");
  f.lane_offsets = required("lane_offsets");
  f.center_mask = optional("center_mask");
  f.lane_kp_mask = optional("lane_kp_mask");
  f.tags = optional("tags");
  return f;
}

std::vector<std::string> list_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
  constexpr std::string_view kSuffix = ".det_heatmaps.tns";
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto file = entry.path().filename().string();
    if (file.size() > kSuffix.size() && file.ends_with(kSuffix)) {
      names.push_back(file.substr(0, file.size() - kSuffix.size()));
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

Frame decode_frame(const FrameTensors& tensors, const DecodeOptions& opts) {
  const auto& hm = tensors.det_heatmaps;
  if (hm.rank() != 3) throw SchemaError(tensors.name + ": det_heatmaps must be C x H x W, got " + hm.shape_string());
  const GridSpec grid(static_cast<int>(hm.width()) * opts.stride, static_cast<int>(hm.height()) * opts.stride,
                      opts.stride);

  Frame out;
  out.name = tensors.name;
  out.width = grid.input_w();
  out.height = grid.input_h();
  Tensor det = tensors.det_heatmaps, occ = tensors.occlusion, lane = tensors.lane_heatmaps;
  if (opts.logits) {
    apply_sigmoid(det);
    apply_sigmoid(occ);
    apply_sigmoid(lane);
  }
  out.boxes = decode_boxes(det, tensors.det_offsets, occ, grid, opts.boxes);
  auto lanes = decode_lanes(lane, tensors.lane_offsets, grid, opts.lanes);
  out.lanes = std::move(lanes.lanes);
  out.lane_polys.resize(out.lanes.size());
  for (auto& p : lanes.polynomials) out.lane_polys[p.lane_index] = std::move(p);
  if (tensors.tags) out.tags = tags_from_tensor(*tensors.tags);
  return out;
}

std::vector<Point2> lane_polyline(const Frame& frame, std::size_t lane) {
  if (lane < frame.lane_polys.size() && frame.lane_polys[lane]) return sample_polynomial(*frame.lane_polys[lane]);
  return frame.lanes.at(lane).points;
}

EvalReport evaluate(const std::vector<Frame>& preds, const std::vector<Frame>& gts, const EvalOptions& opts) {
  std::map<std::string, std::size_t> gt_index;
  for (std::size_t i = 0; i < gts.size(); ++i) gt_index.emplace(gts[i].name, i);
  std::vector<const Frame*> pred_for(gts.size(), nullptr);
  for (const auto& p : preds) {
    const auto it = gt_index.find(p.name);
    if (it == gt_index.end()) throw SchemaError("prediction for unknown frame \"" + p.name + "\"");
    pred_for[it->second] = &p;
  }

  struct Partial {
    ApAccumulator ap;
    OcclusionAccumulator occl;
    LaneIouAccumulator lanes;
    int lane_width = 0;
    std::optional<SceneTags> gt_tags, pred_tags;
  };
  std::vector<Partial> parts(gts.size(), Partial{ApAccumulator(opts.iou_thresh), OcclusionAccumulator(opts.iou_thresh),
                                                 {}, 0, std::nullopt, std::nullopt});
  const Frame empty;
  const auto n = static_cast<std::ptrdiff_t>(gts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Frame& gt = gts[static_cast<std::size_t>(i)];
    const Frame& pred = pred_for[static_cast<std::size_t>(i)] ? *pred_for[static_cast<std::size_t>(i)] : empty;
    Partial& part = parts[static_cast<std::size_t>(i)];
    part.ap.add_image(pred.boxes, gt.boxes);
    part.occl.add_image(pred.boxes, gt.boxes);
    part.lane_width = opts.lane_width > 0 ? opts.lane_width : default_lane_width(gt.width);
    std::vector<std::vector<Point2>> gl, pl;
    for (std::size_t k = 0; k < gt.lanes.size(); ++k) gl.push_back(lane_polyline(gt, k));
    for (std::size_t k = 0; k < pred.lanes.size(); ++k) pl.push_back(lane_polyline(pred, k));
    part.lanes.add_frame(rasterize_lanes(pl, gt.width, gt.height, part.lane_width),
                         rasterize_lanes(gl, gt.width, gt.height, part.lane_width));
    part.gt_tags = gt.tags;
    part.pred_tags = pred.tags;
  }

  ApAccumulator ap(opts.iou_thresh);
  OcclusionAccumulator occl(opts.iou_thresh);
  LaneIouAccumulator lanes;
  ConfusionAccumulator weather(kNumWeather), scene(kNumScene), tod(kNumTimeOfDay);
  EvalReport report;
  for (const auto& part : parts) {
    ap.merge(part.ap);
    occl.merge(part.occl);
    lanes.merge(part.lanes);
    if (std::find(report.lane_widths.begin(), report.lane_widths.end(), part.lane_width) == report.lane_widths.end()) {
      report.lane_widths.push_back(part.lane_width);
    }
    if (part.gt_tags && part.pred_tags) {
      weather.add(part.pred_tags->weather, part.gt_tags->weather);
      scene.add(part.pred_tags->scene, part.gt_tags->scene);
      tod.add(part.pred_tags->time_of_day, part.gt_tags->time_of_day);
    }
  }
  report.ap = ap.result();
  report.occlusion = occl.result();
  report.lane_iou = lanes.result();
  std::sort(report.lane_widths.begin(), report.lane_widths.end());
  if (weather.samples() > 0) {
    report.f1_weather = weather.macro_f1();
    report.f1_scene = scene.macro_f1();
    report.f1_tod = tod.macro_f1();
  }
  report.frames = gts.size();
  return report;
}

std::string report_to_json(const EvalReport& r) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json per_class = json::object();
  for (std::size_t k = 0; k < r.ap.per_class.size(); ++k) {
    per_class[std::string(kDetCategories[k])] = opt(r.ap.per_class[k]);
  }
  json doc{{"map50", r.ap.map},
           {"classes_with_gt", r.ap.classes_with_gt},
           {"per_class_ap", std::move(per_class)},
           {"occlusion_accuracy", r.occlusion.accuracy},
           {"occlusion_matches", r.occlusion.matched},
           {"lane_iou", r.lane_iou},
           {"lane_width_px", r.lane_widths},
           {"f1_weather", opt(r.f1_weather)},
           {"f1_scene", opt(r.f1_scene)},
           {"f1_timeofday", opt(r.f1_tod)},
           {"frames", r.frames}};
  return doc.dump(2) + "\n";
}

}  // namespace centerpercept::io
