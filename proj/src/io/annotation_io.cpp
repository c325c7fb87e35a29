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

#include "centerpercept/annotation_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace centerpercept::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& what) {
  throw SchemaError(source + ": " + path + ": " + what);
}

template <std::size_t N>
int lookup(const std::array<std::string_view, N>& table, const json& v, const std::string& source,
           const std::string& path) {
  if (!v.is_string()) fail(source, path, "expected a category string");
  const auto s = v.get<std::string>();
  const auto it = std::find(table.begin(), table.end(), s);
  if (it == table.end()) fail(source, path, "unknown category \"" + s + "\"");
  return static_cast<int>(it - table.begin());
}

double number(const json& obj, const char* key, const std::string& source, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(source, path, std::string("missing \"") + key + "\"");
  if (!it->is_number()) fail(source, path + "." + key, "expected a number");
  return it->get<double>();
}

int positive_int(const json& obj, const char* key, const std::string& source, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(source, path, std::string("missing \"") + key + "\"");
  if (!it->is_number_integer() || it->get<long long>() <= 0 || it->get<long long>() > 1 << 20) {
    fail(source, path + "." + key, "expected a positive integer");
  }
  return it->get<int>();
}

Point2 point(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(source, path, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

LanePolynomial parse_poly(const json& v, int class_id, const std::string& source, const std::string& path) {
  if (!v.is_object()) fail(source, path, "expected an object");
  LanePolynomial p;
  p.class_id = class_id;
  const auto c = v.find("coefficients");
  if (c == v.end() || !c->is_array() || c->empty()) fail(source, path, "missing \"coefficients\" array");
  for (std::size_t i = 0; i < c->size(); ++i) {
    if (!(*c)[i].is_number()) fail(source, path + ".coefficients[" + std::to_string(i) + "]", "expected a number");
    p.coefficients.push_back((*c)[i].get<double>());
  }
  p.y_min = number(v, "y_min", source, path);
  p.y_max = number(v, "y_max", source, path);
  if (!(p.y_min <= p.y_max)) fail(source, path, "y_min exceeds y_max");
  return p;
}

Frame parse_frame(const json& f, const std::string& source, const std::string& path) {
  if (!f.is_object()) fail(source, path, "expected a frame object");
  Frame frame;
  const auto name = f.find("name");
  if (name == f.end() || !name->is_string() || name->get<std::string>().empty()) {
    fail(source, path, "missing non-empty \"name\"");
  }
  frame.name = name->get<std::string>();
  if (frame.name.find('/') != std::string::npos || frame.name.find('\\') != std::string::npos) {
    fail(source, path + ".name", "frame names may not contain path separators");
  }
  frame.width = positive_int(f, "width", source, path);
  frame.height = positive_int(f, "height", source, path);

  if (const auto t = f.find("tags"); t != f.end() && !t->is_null()) {
    const std::string tp = path + ".tags";
    if (!t->is_object()) fail(source, tp, "expected an object");
    for (const char* key : {"weather", "scene", "timeofday"}) {
      if (!t->contains(key)) fail(source, tp, std::string("missing \"") + key + "\"");
    }
    frame.tags = SceneTags{lookup(kWeatherTags, (*t)["weather"], source, tp + ".weather"),
                           lookup(kSceneTags, (*t)["scene"], source, tp + ".scene"),
                           lookup(kTimeOfDayTags, (*t)["timeofday"], source, tp + ".timeofday")};
  }

  if (const auto bs = f.find("boxes"); bs != f.end()) {
    if (!bs->is_array()) fail(source, path + ".boxes", "expected an array");
    for (std::size_t i = 0; i < bs->size(); ++i) {
      const json& b = (*bs)[i];
      const std::string bp = path + ".boxes[" + std::to_string(i) + "]";
      if (!b.is_object()) fail(source, bp, "expected a box object");
      BoundingBoxAnn box;
      box.x1 = number(b, "x1", source, bp);
      box.y1 = number(b, "y1", source, bp);
      box.x2 = number(b, "x2", source, bp);
      box.y2 = number(b, "y2", source, bp);
      if (!b.contains("category")) fail(source, bp, "missing \"category\"");
      box.class_id = lookup(kDetCategories, b["category"], source, bp + ".category");
      if (const auto o = b.find("occluded"); o != b.end()) {
        if (!o->is_boolean()) fail(source, bp + ".occluded", "expected a boolean");
        box.occluded = o->get<bool>();
      }
      if (b.contains("score")) box.score = number(b, "score", source, bp);
      if (const auto err = validate_box(box, frame.width, frame.height); !err.empty()) fail(source, bp, err);
      frame.boxes.push_back(box);
    }
  }

  if (const auto ls = f.find("lanes"); ls != f.end()) {
    if (!ls->is_array()) fail(source, path + ".lanes", "expected an array");
    for (std::size_t i = 0; i < ls->size(); ++i) {
      const json& l = (*ls)[i];
      const std::string lp = path + ".lanes[" + std::to_string(i) + "]";
      if (!l.is_object()) fail(source, lp, "expected a lane object");
      LaneInstance lane;
      if (!l.contains("category")) fail(source, lp, "missing \"category\"");
      lane.class_id = lookup(kLaneCategories, l["category"], source, lp + ".category");
      const auto pts = l.find("points");
      if (pts == l.end() || !pts->is_array()) fail(source, lp, "missing \"points\" array");
      for (std::size_t j = 0; j < pts->size(); ++j) {
        lane.points.push_back(point((*pts)[j], source, lp + ".points[" + std::to_string(j) + "]"));
      }
      if (const auto err = validate_lane(lane, frame.width, frame.height); !err.empty()) fail(source, lp, err);
      std::optional<LanePolynomial> poly;
      if (const auto pp = l.find("poly"); pp != l.end() && !pp->is_null()) {
        poly = parse_poly(*pp, lane.class_id, source, lp + ".poly");
        poly->lane_index = frame.lanes.size();
      }
      frame.lanes.push_back(std::move(lane));
      frame.lane_polys.push_back(std::move(poly));
    }
  }
  return frame;
}

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + " (byte " +
         std::to_string(byte) + ")";
}

}  // namespace

std::vector<Frame> parse_frames(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the 1-based byte index of the offending character.
    throw SchemaError(source + ": " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": invalid JSON");
  }
  if (!doc.is_array()) fail(source, "$", "expected a top-level array of frames");
  std::vector<Frame> frames;
  frames.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    frames.push_back(parse_frame(doc[i], source, "$[" + std::to_string(i) + "]"));
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (frames[i].name == frames[j].name) {
        fail(source, "$[" + std::to_string(i) + "].name", "duplicate frame name \"" + frames[i].name + "\"");
      }
    }
  }
  return frames;
}

std::vector<Frame> read_frames_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_frames(ss.str(), path.string());
}

std::string frames_to_json(const std::vector<Frame>& frames) {
  json doc = json::array();
  for (const auto& fr : frames) {
    json f;
    f["name"] = fr.name;
    f["width"] = fr.width;
    f["height"] = fr.height;
    if (fr.tags) {
      f["tags"] = {{"weather", kWeatherTags[fr.tags->weather]},
                   {"scene", kSceneTags[fr.tags->scene]},
                   {"timeofday", kTimeOfDayTags[fr.tags->time_of_day]}};
    }
    json boxes = json::array();
    for (const auto& b : fr.boxes) {
      boxes.push_back({{"x1", b.x1},
                       {"y1", b.y1},
                       {"x2", b.x2},
                       {"y2", b.y2},
                       {"category", kDetCategories[b.class_id]},
                       {"occluded", b.occluded},
                       {"score", b.score}});
    }
    f["boxes"] = std::move(boxes);
    json lanes = json::array();
    for (std::size_t i = 0; i < fr.lanes.size(); ++i) {
      const auto& l = fr.lanes[i];
      json pts = json::array();
      for (const auto& p : l.points) pts.push_back({p.x, p.y});
      json lane{{"category", kLaneCategories[l.class_id]}, {"points", std::move(pts)}};
      if (i < fr.lane_polys.size() && fr.lane_polys[i]) {
        const auto& poly = *fr.lane_polys[i];
        lane["poly"] = {{"coefficients", poly.coefficients}, {"y_min", poly.y_min}, {"y_max", poly.y_max}};
      }
      lanes.push_back(std::move(lane));
    }
    f["lanes"] = std::move(lanes);
    doc.push_back(std::move(f));
  }
  return doc.dump(2) + "\n";
}

void write_frames_file(const std::filesystem::path& path, const std::vector<Frame>& frames) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << frames_to_json(frames);
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace centerpercept::io
