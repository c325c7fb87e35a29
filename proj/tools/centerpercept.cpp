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


// centerpercept command-line tool: encode, decode, eval, losscheck, synth, viz.

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "centerpercept/annotation_io.hpp"
#include "centerpercept/losses.hpp"
#include "centerpercept/oracle.hpp"
#include "centerpercept/pipeline.hpp"
#include "centerpercept/synth.hpp"
#include "centerpercept/viz.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
namespace cp = centerpercept;
namespace cio = centerpercept::io;

namespace {

constexpr int kExitTolerance = 1;
constexpr int kExitSchema = 2;

class ToleranceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs fn(i) for every frame on the OpenMP pool. Outputs are written by
// index, so ordering does not depend on scheduling; the first failure (by
// frame index) is rethrown.
template <typename Fn>
void for_each_frame(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path);
}

// --config FILE: a JSON object whose keys mirror the subcommand's long
// flags. Its values are inserted ahead of the explicit arguments, and the
// last occurrence of an option wins, so the command line overrides the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::size_t sub = 1;
  while (sub < args.size() && args[sub].starts_with("-")) ++sub;
  std::string path;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw cio::SchemaError(path + ": byte " + std::to_string(e.byte) + ": invalid JSON");
  }
  if (!doc.is_object()) throw cio::SchemaError(path + ": $: expected an object of flag values");
  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      injected.push_back(flag);
      injected.push_back(value.dump());
    } else {
      throw cio::SchemaError(path + ": $." + key + ": expected a string, number or boolean");
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(sub + 1, args.size())), injected.begin(),
              injected.end());
  return args;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string ann, out;
  int stride = cp::defaults::kStride;
  cp::EncoderConfig cfg;
};

int run_encode(const EncodeArgs& a) {
  const auto frames = cio::read_frames_file(a.ann);
  fs::create_directories(a.out);
  for_each_frame(frames.size(), [&](std::size_t i) {
    const auto& fr = frames[i];
    const cp::GridSpec grid(fr.width, fr.height, a.stride);
    const auto bundle = cp::encode_targets(fr.boxes, fr.lanes, grid, a.cfg);
    cio::write_frame_tensors(a.out, cio::bundle_to_tensors(fr.name, bundle, fr.tags));
  });
  std::cerr << "encoded " << frames.size() << " frame(s) into " << a.out << "\n";
  return 0;
}

struct DecodeArgs {
  std::string tensors, out;
  cio::DecodeOptions opts;
};

int run_decode(const DecodeArgs& a) {
  const auto names = cio::list_frames(a.tensors);
  std::vector<cio::Frame> frames(names.size());
  for_each_frame(names.size(), [&](std::size_t i) {
    frames[i] = cio::decode_frame(cio::read_frame_tensors(a.tensors, names[i]), a.opts);
  });
  write_text(a.out, cio::frames_to_json(frames));
  std::size_t boxes = 0, lanes = 0;
  for (const auto& f : frames) {
    boxes += f.boxes.size();
    lanes += f.lanes.size();
  }
  std::cerr << "decoded " << frames.size() << " frame(s): " << boxes << " box(es), " << lanes << " lane(s)\n";
  return 0;
}

struct EvalArgs {
  std::string pred, gt, out = "-";
  cio::EvalOptions opts;
};

int run_eval(const EvalArgs& a) {
  const auto preds = cio::read_frames_file(a.pred);
  const auto gts = cio::read_frames_file(a.gt);
  const auto report = cio::evaluate(preds, gts, a.opts);
  write_text(a.out, cio::report_to_json(report));
  if (a.out != "-") {
    std::cerr << "mAP50 " << report.ap.map << "  occlusion accuracy " << report.occlusion.accuracy << " ("
              << report.occlusion.matched << " matches)  lane IoU " << report.lane_iou << "\n";
  }
  return 0;
}

struct LossArgs {
  std::uint64_t seed = 0;
  int count = 1;
  int size = 32;
  double step = 1e-3;
  double tol = 1e-3;
  cp::HeatmapLossParams params;
};

int run_losscheck(const LossArgs& a) {
  bool ok = true;
  const auto single = [&](float h, float hp) {
    return cp::weighted_l2_loss(cp::Tensor({1, 1}, h), cp::Tensor({1, 1}, hp), {a.params.alpha, a.params.beta, 1.0});
  };
  const double l_eq = single(0.5f, 0.5f), l_fp = single(0.0f, 1.0f), l_fn = single(1.0f, 0.0f);
  std::cout << "loss(H=Hp) = " << l_eq << "\n"
            << "loss(H=0, Hp=1) = " << l_fp << "\n"
            << "loss(H=1, Hp=0) = " << l_fn << "\n";
  if (a.params.alpha == 4.0 && a.params.beta == 2.0 && (l_eq != 0.0 || l_fp != 4.0 || l_fn != 16.0)) {
    std::cout << "hand values differ from 0 / 4 / 16\n";
    ok = false;
  }
  double worst = 0.0;
  for (int k = 0; k < a.count; ++k) {
    const auto seed = a.seed + static_cast<std::uint64_t>(k);
    const auto [target, pred] = cp::oracle::random_loss_case(seed, static_cast<std::size_t>(a.size),
                                                             static_cast<std::size_t>(a.size));
    cp::HeatmapLossParams p = a.params;
    p.n_k = cp::count_target_peaks(target);
    const auto r = cp::oracle::check_loss_gradient(target, pred, p, a.step);
    std::cout << "seed " << seed << ": loss " << r.loss << "  grad rel error " << r.rel_error << "  max abs error "
              << r.max_abs_error << "  (" << r.checked << " cells, " << r.ties << " tie cells excluded)\n";
    worst = std::max(worst, r.rel_error);
  }
  std::cout << "max relative gradient error " << worst << " (tolerance " << a.tol << ")\n";
  if (!(worst < a.tol)) ok = false;
  if (!ok) throw ToleranceFailure("loss check failed");
  return 0;
}

struct SynthArgs {
  std::string out;
  int count = 1;
  cp::SceneConfig cfg;
};

int run_synth(const SynthArgs& a) {
  if (a.count < 0) throw cp::InvalidArgument("--count must be >= 0");
  const auto scenes = cp::generate_scenes(a.cfg, static_cast<std::size_t>(a.count));
  std::vector<cio::Frame> frames;
  frames.reserve(scenes.size());
  for (const auto& s : scenes) {
    cio::Frame f;
    f.name = s.name;
    f.width = s.width;
    f.height = s.height;
    f.tags = s.tags;
    f.boxes = s.boxes;
    f.lanes = s.lanes;
    for (std::size_t i = 0; i < s.lane_curves.size(); ++i) {
      cp::LanePolynomial p;
      p.class_id = s.lanes[i].class_id;
      p.coefficients = s.lane_curves[i].coefficients;
      p.y_min = s.lane_curves[i].y_min;
      p.y_max = s.lane_curves[i].y_max;
      p.lane_index = i;
      f.lane_polys.emplace_back(std::move(p));
    }
    frames.push_back(std::move(f));
  }
  write_text(a.out, cio::frames_to_json(frames));
  return 0;
}

struct VizArgs {
  std::string ann, pred, out;
  int stride = cp::defaults::kStride;
};

int run_viz(const VizArgs& a) {
  const auto gts = cio::read_frames_file(a.ann);
  std::vector<cio::Frame> preds;
  if (!a.pred.empty()) preds = cio::read_frames_file(a.pred);
  std::map<std::string, const cio::Frame*> by_name;
  for (const auto& p : preds) by_name[p.name] = &p;
  fs::create_directories(a.out);
  for_each_frame(gts.size(), [&](std::size_t i) {
    const auto it = by_name.find(gts[i].name);
    const cio::Frame* pred = it == by_name.end() ? nullptr : it->second;
    cio::write_ppm(fs::path(a.out) / (gts[i].name + ".ppm"), cio::render_overlay(gts[i], pred, a.stride));
  });
  std::cerr << "wrote " << gts.size() << " overlay(s) to " << a.out << "\n";
  return 0;
}

void configure_workers() {
  if (const char* env = std::getenv("CENTERPERCEPT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_workers();

  CLI::App app{"Center-based perception targets: encoding, decoding, evaluation and checks.", "centerpercept"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.footer(
      "Each subcommand accepts --config FILE, a JSON object keyed by its long flag names; explicit flags win.\n"
      "Set CENTERPERCEPT_WORKERS to bound the frame worker pool.\n"
      "Exit codes: 0 success, 1 tolerance failure, 2 malformed input or usage error.");
  const auto add_config_flag = [](CLI::App* sub) {
    // Handled before parsing; declared so it appears in --help.
    sub->add_option("--config", "JSON file mirroring this subcommand's flags");
  };

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode annotations into per-frame target tensors");
  c_enc->add_option("--ann", enc.ann, "Annotation JSON")->required()->check(CLI::ExistingFile);
  c_enc->add_option("--out", enc.out, "Output directory for <frame>.<head>.tns files")->required();
  c_enc->add_option("--stride", enc.stride, "Output stride S")->capture_default_str()->check(CLI::PositiveNumber);
  c_enc->add_option("--lane-sigma", enc.cfg.lane_sigma, "Lane keypoint Gaussian sigma (grid cells)")
      ->capture_default_str();
  c_enc->add_option("--min-iou", enc.cfg.min_iou, "Minimum IoU for the corner radius (chosen)")
      ->capture_default_str();
  c_enc->add_option("--sigma-floor", enc.cfg.sigma_floor, "Lower bound on box sigma (chosen)")->capture_default_str();
  c_enc->add_option("--lane-pace", enc.cfg.lane_pace, "Lane resampling pace in pixels (chosen)")
      ->capture_default_str();
  add_config_flag(c_enc);

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Decode per-frame output tensors into boxes and lanes");
  c_dec->add_option("--tensors", dec.tensors, "Directory of <frame>.<head>.tns files")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_dec->add_option("--out", dec.out, "Output JSON ('-' for stdout)")->required();
  c_dec->add_option("--threshold", dec.opts.boxes.threshold, "Peak score threshold")->capture_default_str();
  c_dec->add_option("--cluster-dist", dec.opts.lanes.dist_threshold, "Ward linkage stop distance, grid cells (chosen)")
      ->capture_default_str();
  c_dec->add_option("--poly-degree", dec.opts.lanes.poly_degree, "Lane polynomial degree (chosen)")
      ->capture_default_str();
  c_dec->add_option("--occl-threshold", dec.opts.boxes.occl_threshold, "Occlusion decision threshold (chosen)")
      ->capture_default_str();
  c_dec->add_option("--stride", dec.opts.stride, "Output stride S")->capture_default_str()->check(CLI::PositiveNumber);
  c_dec->add_flag("--logits", dec.opts.logits, "Heatmap and occlusion heads hold logits; apply a sigmoid first");
  add_config_flag(c_dec);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  c_ev->add_option("--pred", ev.pred, "Predicted frames JSON")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--gt", ev.gt, "Ground-truth frames JSON")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev.out, "Report JSON ('-' for stdout)")->capture_default_str();
  c_ev->add_option("--iou", ev.opts.iou_thresh, "IoU threshold for AP and occlusion matching")->capture_default_str();
  c_ev->add_option("--lane-width", ev.opts.lane_width,
                   "Lane mask width in pixels; 0 scales 8 px at 1280 wide with the frame width (chosen)")
      ->capture_default_str();
  add_config_flag(c_ev);

  LossArgs lc;
  auto* c_lc = app.add_subcommand("losscheck", "Print heatmap loss values and the finite-difference gradient error");
  c_lc->add_option("--seed", lc.seed, "First random seed")->capture_default_str();
  c_lc->add_option("--count", lc.count, "Number of seeds (chosen)")->capture_default_str()->check(CLI::PositiveNumber);
  c_lc->add_option("--size", lc.size, "Side of the square random maps (chosen)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_lc->add_option("--fd-step", lc.step, "Central difference step")->capture_default_str();
  c_lc->add_option("--tol", lc.tol, "Relative error tolerance (chosen)")->capture_default_str();
  c_lc->add_option("--alpha", lc.params.alpha, "Target weight exponent")->capture_default_str();
  c_lc->add_option("--beta", lc.params.beta, "Prediction weight exponent")->capture_default_str();
  add_config_flag(c_lc);

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate synthetic annotated scenes");
  c_sy->add_option("--out", sy.out, "Output annotation JSON ('-' for stdout)")->required();
  c_sy->add_option("--count", sy.count, "Number of scenes (chosen)")->capture_default_str();
  c_sy->add_option("--seed", sy.cfg.seed, "Seed of the first scene; scene i uses seed + i")->capture_default_str();
  c_sy->add_option("--width", sy.cfg.image_w, "Image width")->capture_default_str();
  c_sy->add_option("--height", sy.cfg.image_h, "Image height")->capture_default_str();
  c_sy->add_option("--stride", sy.cfg.stride, "Output stride used for separation checks")->capture_default_str();
  c_sy->add_option("--boxes-min", sy.cfg.n_boxes_min, "Minimum boxes per scene (chosen)")->capture_default_str();
  c_sy->add_option("--boxes-max", sy.cfg.n_boxes_max, "Maximum boxes per scene (chosen)")->capture_default_str();
  c_sy->add_option("--lanes-min", sy.cfg.n_lanes_min, "Minimum lanes per scene (chosen)")->capture_default_str();
  c_sy->add_option("--lanes-max", sy.cfg.n_lanes_max, "Maximum lanes per scene (chosen)")->capture_default_str();
  c_sy->add_option("--box-size-min", sy.cfg.box_size_min, "Minimum box side, pixels (chosen)")->capture_default_str();
  c_sy->add_option("--box-size-max", sy.cfg.box_size_max, "Maximum box side, pixels (chosen)")->capture_default_str();
  c_sy->add_option("--center-separation", sy.cfg.min_center_separation,
                   "Minimum Chebyshev distance between rounded centers, grid cells (chosen)")
      ->capture_default_str();
  c_sy->add_option("--lane-degree-min", sy.cfg.lane_degree_min, "Minimum lane polynomial degree (chosen)")
      ->capture_default_str();
  c_sy->add_option("--lane-degree-max", sy.cfg.lane_degree_max, "Maximum lane polynomial degree (chosen)")
      ->capture_default_str();
  c_sy->add_option("--lane-max-slope", sy.cfg.lane_max_slope, "Maximum |dx/dy| of a lane (chosen)")
      ->capture_default_str();
  c_sy->add_option("--midpoint-separation", sy.cfg.midpoint_separation,
                   "Minimum distance between lane midpoints, grid cells (chosen)")
      ->capture_default_str();
  c_sy->add_option("--lane-pace", sy.cfg.lane_pace, "Lane resampling pace, pixels (chosen)")->capture_default_str();
  c_sy->add_option("--max-retries", sy.cfg.max_retries, "Placement attempts per object (chosen)")
      ->capture_default_str();
  add_config_flag(c_sy);

  VizArgs vz;
  auto* c_vz = app.add_subcommand("viz", "Write PPM overlays of heatmaps, boxes and lanes");
  c_vz->add_option("--ann", vz.ann, "Ground-truth annotation JSON")->required()->check(CLI::ExistingFile);
  c_vz->add_option("--pred", vz.pred, "Optional predicted frames JSON")->check(CLI::ExistingFile);
  c_vz->add_option("--out", vz.out, "Output directory")->required();
  c_vz->add_option("--stride", vz.stride, "Output stride S")->capture_default_str()->check(CLI::PositiveNumber);
  add_config_flag(c_vz);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : kExitSchema;
    }
    if (c_enc->parsed()) return run_encode(enc);
    if (c_dec->parsed()) return run_decode(dec);
    if (c_ev->parsed()) return run_eval(ev);
    if (c_lc->parsed()) return run_losscheck(lc);
    if (c_sy->parsed()) return run_synth(sy);
    if (c_vz->parsed()) return run_viz(vz);
    return kExitSchema;
  } catch (const ToleranceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTolerance;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  }
}
