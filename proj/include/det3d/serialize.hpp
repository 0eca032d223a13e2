#pragma once

// JSON interchange: scene files, dataset manifest, detections and evaluation
// reports. Keys are emitted in a fixed order.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "det3d/core.hpp"
#include "det3d/metrics.hpp"
#include "det3d/pipeline.hpp"
#include "det3d/synthgen.hpp"
#include "json.hpp"

namespace det3d::serialize {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(ctx + ": missing key '" + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key, const std::string& ctx) {
  try {
    return require(j, key, ctx).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ctx + ": key '" + key + "': " + e.what());
  }
}

template <typename Enum, std::size_t N>
Enum get_enum(const Json& j, const char* key, const std::array<Enum, N>& values,
              const std::string& ctx) {
  const auto text = get<std::string>(j, key, ctx);
  const auto v = synth::parse_enum(text, values);
  if (!v) throw ParseError(ctx + ": unknown " + key + " '" + text + "'");
  return *v;
}

inline SuperCategory get_super(const Json& j, const char* key, const std::string& ctx) {
  const auto text = get<std::string>(j, key, ctx);
  const auto v = synth::parse_super(text);
  if (!v) throw ParseError(ctx + ": unknown super-category '" + text + "'");
  return *v;
}

inline Json optional_number(const std::optional<double>& v) {
  return (v && std::isfinite(*v)) ? Json(*v) : Json(nullptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Boxes and camera
// ---------------------------------------------------------------------------

inline Json to_json(const Box2D& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline Json to_json(const Box3D& b) {
  Json j;
  j["center"] = Json::array({b.center.x, b.center.y, b.center.z});
  j["dims"] = Json::array({b.dims.w, b.dims.h, b.dims.l});
  j["orientation"] = Json::array({b.orientation.azimuth, b.orientation.elevation, b.orientation.roll});
  return j;
}

inline Box2D box2d_from_json(const Json& j, std::size_t cls, double score, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) throw ParseError(ctx + ": box2d must be [x0, y0, x1, y1]");
  try {
    return Box2D(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(),
                 cls, score);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ctx + ": box2d: " + e.what());
  } catch (const DomainError& e) {
    throw ParseError(ctx + ": box2d: " + e.what());
  }
}

inline Box3D box3d_from_json(const Json& j, std::size_t cls, double score, const std::string& ctx) {
  auto triple = [&](const char* key) {
    const auto v = detail::get<std::vector<double>>(j, key, ctx);
    if (v.size() != 3) throw ParseError(ctx + ": " + key + " needs 3 values");
    return v;
  };
  const auto c = triple("center");
  const auto d = triple("dims");
  const auto o = triple("orientation");
  try {
    return Box3D({c[0], c[1], c[2]}, {d[0], d[1], d[2]}, {o[0], o[1], o[2]}, cls, score);
  } catch (const DomainError& e) {
    throw ParseError(ctx + ": box3d: " + e.what());
  }
}

inline Json to_json(const CameraIntrinsics& k) {
  Json j;
  j["P"] = k.matrix();
  return j;
}

inline CameraIntrinsics camera_from_json(const Json& j, const std::string& ctx) {
  const auto p = detail::get<std::vector<double>>(j, "P", ctx);
  if (p.size() != 12) throw ParseError(ctx + ": camera P needs 12 values");
  std::array<double, 12> a{};
  std::copy(p.begin(), p.end(), a.begin());
  try {
    return CameraIntrinsics(a);
  } catch (const DomainError& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

inline Json to_json(const ClassTaxonomy& t) {
  Json arr = Json::array();
  for (const auto& c : t.classes()) {
    Json j;
    j["name"] = c.name;
    j["super"] = std::string(to_string(c.super));
    arr.push_back(j);
  }
  return arr;
}

inline ClassTaxonomy taxonomy_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": taxonomy must be an array");
  std::vector<ClassInfo> classes;
  for (const auto& c : j) {
    classes.push_back({detail::get<std::string>(c, "name", ctx), detail::get_super(c, "super", ctx)});
  }
  try {
    return ClassTaxonomy(std::move(classes));
  } catch (const ConfigError& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sweep points and scenes
// ---------------------------------------------------------------------------

inline Json to_json(const synth::SweepPoint& p) {
  Json j;
  j["category"] = std::string(synth::to_string(p.category));
  j["super"] = std::string(to_string(p.super));
  j["scene"] = std::string(synth::to_string(p.scene));
  j["grid_index"] = p.grid_index;
  j["camera"] = {{"distance", p.camera_distance},
                 {"elevation", p.camera_elevation},
                 {"azimuth", p.camera_azimuth}};
  j["light"] = {{"intensity", p.light_intensity},
                {"elevation", p.light_elevation},
                {"azimuth", p.light_azimuth}};
  j["weather"] = {{"rain", p.weather.rain}, {"wind", p.weather.wind}};
  j["sensor"] = std::string(synth::to_string(p.sensor));
  return j;
}

inline synth::SweepPoint sweep_point_from_json(const Json& j, const std::string& ctx) {
  synth::SweepPoint p;
  p.category = detail::get_enum(j, "category", synth::kAllCategories, ctx);
  p.super = detail::get_super(j, "super", ctx);
  p.scene = detail::get_enum(j, "scene", synth::kAllScenes, ctx);
  p.grid_index = detail::get<std::size_t>(j, "grid_index", ctx);
  const Json& cam = detail::require(j, "camera", ctx);
  p.camera_distance = detail::get<double>(cam, "distance", ctx);
  p.camera_elevation = detail::get<double>(cam, "elevation", ctx);
  p.camera_azimuth = detail::get<double>(cam, "azimuth", ctx);
  const Json& light = detail::require(j, "light", ctx);
  p.light_intensity = detail::get<double>(light, "intensity", ctx);
  p.light_elevation = detail::get<double>(light, "elevation", ctx);
  p.light_azimuth = detail::get<double>(light, "azimuth", ctx);
  const Json& weather = detail::require(j, "weather", ctx);
  p.weather.rain = detail::get<bool>(weather, "rain", ctx);
  p.weather.wind = detail::get<double>(weather, "wind", ctx);
  p.sensor = detail::get_enum(j, "sensor", synth::kAllSensors, ctx);
  return p;
}

inline Json to_json(const synth::SceneSample& s, const ClassTaxonomy& taxonomy) {
  Json j;
  j["id"] = s.id;
  j["image"] = {{"width", s.image_width}, {"height", s.image_height}};
  j["camera"] = to_json(s.camera);
  j["sweep"] = to_json(s.point);
  Json objects = Json::array();
  for (const auto& o : s.objects) {
    Json jo;
    jo["class"] = taxonomy.name(o.box3d.class_id);
    jo["class_id"] = o.box3d.class_id;
    jo["box3d"] = to_json(o.box3d);
    jo["box2d"] = to_json(o.box2d);
    objects.push_back(jo);
  }
  j["objects"] = objects;
  return j;
}

inline synth::SceneSample scene_from_json(const Json& j, const ClassTaxonomy& taxonomy) {
  synth::SceneSample s;
  s.id = detail::get<std::string>(j, "id", "scene");
  const std::string ctx = "scene " + s.id;
  const Json& image = detail::require(j, "image", ctx);
  s.image_width = detail::get<std::size_t>(image, "width", ctx);
  s.image_height = detail::get<std::size_t>(image, "height", ctx);
  s.camera = camera_from_json(detail::require(j, "camera", ctx), ctx);
  s.point = sweep_point_from_json(detail::require(j, "sweep", ctx), ctx);
  for (const auto& jo : detail::require(j, "objects", ctx)) {
    const auto name = detail::get<std::string>(jo, "class", ctx);
    const auto cls = taxonomy.index_of(name);
    if (!cls) throw ParseError(ctx + ": unknown class '" + name + "'");
    s.objects.push_back({box3d_from_json(detail::require(jo, "box3d", ctx), *cls, 1.0, ctx),
                         box2d_from_json(detail::require(jo, "box2d", ctx), *cls, 1.0, ctx)});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Detections
// ---------------------------------------------------------------------------

struct FrameDetectionsRecord {
  std::string frame;
  std::vector<Box2D> boxes;
  std::vector<std::optional<Box3D>> boxes3d;
};

inline Json detections_to_json(const std::vector<FrameDetectionsRecord>& frames,
                               const ClassTaxonomy& taxonomy) {
  Json arr = Json::array();
  for (const auto& f : frames) {
    Json jf;
    jf["frame"] = f.frame;
    Json dets = Json::array();
    for (std::size_t i = 0; i < f.boxes.size(); ++i) {
      const Box2D& b = f.boxes[i];
      Json jd;
      jd["class"] = taxonomy.name(b.class_id);
      jd["class_id"] = b.class_id;
      jd["score"] = b.score;
      jd["box2d"] = to_json(b);
      jd["box3d"] = (i < f.boxes3d.size() && f.boxes3d[i]) ? to_json(*f.boxes3d[i]) : Json(nullptr);
      dets.push_back(jd);
    }
    jf["detections"] = dets;
    arr.push_back(jf);
  }
  Json j;
  j["frames"] = arr;
  return j;
}

inline std::vector<FrameDetectionsRecord> detections_from_json(const Json& j,
                                                               const ClassTaxonomy& taxonomy) {
  std::vector<FrameDetectionsRecord> out;
  for (const auto& jf : detail::require(j, "frames", "detections")) {
    FrameDetectionsRecord f;
    f.frame = detail::get<std::string>(jf, "frame", "detections");
    const std::string ctx = "detections frame " + f.frame;
    for (const auto& jd : detail::require(jf, "detections", ctx)) {
      const auto name = detail::get<std::string>(jd, "class", ctx);
      const auto cls = taxonomy.index_of(name);
      if (!cls) throw ParseError(ctx + ": unknown class '" + name + "'");
      const double score = detail::get<double>(jd, "score", ctx);
      if (!(score >= 0.0 && score <= 1.0)) throw ParseError(ctx + ": score outside [0, 1]");
      f.boxes.push_back(box2d_from_json(detail::require(jd, "box2d", ctx), *cls, score, ctx));
      const Json& b3 = detail::require(jd, "box3d", ctx);
      f.boxes3d.push_back(b3.is_null() ? std::nullopt
                                       : std::optional(box3d_from_json(b3, *cls, score, ctx)));
    }
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct BreakdownRow {
  SuperCategory super;
  synth::SweepCategory category;
  std::optional<double> map;
  std::size_t frames = 0;
};

inline Json to_json(const metrics::EvalReport& r, const ClassTaxonomy& taxonomy,
                    const std::vector<BreakdownRow>& breakdown = {}) {
  Json j;
  Json per_class = Json::object();
  for (const auto& [name, ap] : r.per_class_ap) per_class[name] = ap;
  j["per_class_ap"] = per_class;
  j["map"] = detail::optional_number(r.map);

  Json labels = Json::array();
  for (const auto& c : taxonomy.classes()) labels.push_back(c.name);
  labels.push_back("background");
  Json counts = Json::array();
  for (std::size_t t = 0; t <= r.confusion.num_classes(); ++t) {
    Json row = Json::array();
    for (std::size_t d = 0; d <= r.confusion.num_classes(); ++d) row.push_back(r.confusion.at(t, d));
    counts.push_back(row);
  }
  j["confusion"] = {{"labels", labels}, {"counts", counts}};
  j["sie"] = detail::optional_number(r.sie);
  j["mean_diou_loss"] = detail::optional_number(r.mean_diou_loss);
  j["matched_pairs"] = r.matched_pairs;
  if (!breakdown.empty()) {
    Json rows = Json::array();
    for (const auto& b : breakdown) {
      rows.push_back({{"super", std::string(to_string(b.super))},
                      {"category", std::string(synth::to_string(b.category))},
                      {"map", detail::optional_number(b.map)},
                      {"frames", b.frames}});
    }
    j["breakdown"] = rows;
  }
  return j;
}

}  // namespace det3d::serialize
