#pragma once

// Synthetic-scene oracle. Samples ground-truth scenes on the camera / light /
// weather / sensor parameter grids and renders the maps a perfect network
// would emit for them, so decode, geometry and metrics can be checked in a
// closed loop without a trained model.
//
// Light, weather and sensor parameters do not change geometry. They travel
// with each sample as annotation metadata and select corrupt_maps noise
// presets.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "det3d/bundle.hpp"
#include "det3d/core.hpp"
#include "det3d/geometry3d.hpp"
#include "det3d/metrics.hpp"

namespace det3d::synth {

enum class SweepCategory : std::uint8_t { Camera, Light, Weather, Sensor };
enum class Scene : std::uint8_t { City, Desert, Forest, Grass };
enum class SensorStyle : std::uint8_t { Rgb, Night, Thermal };

inline std::string_view to_string(SweepCategory c) noexcept {
  switch (c) {
    case SweepCategory::Camera: return "Camera";
    case SweepCategory::Light: return "Light";
    case SweepCategory::Weather: return "Weather";
    case SweepCategory::Sensor: return "Sensor";
  }
  return "unknown";
}

inline std::string_view to_string(Scene s) noexcept {
  switch (s) {
    case Scene::City: return "City";
    case Scene::Desert: return "Desert";
    case Scene::Forest: return "Forest";
    case Scene::Grass: return "Grass";
  }
  return "unknown";
}

inline std::string_view to_string(SensorStyle s) noexcept {
  switch (s) {
    case SensorStyle::Rgb: return "rgb";
    case SensorStyle::Night: return "night";
    case SensorStyle::Thermal: return "thermal";
  }
  return "unknown";
}

// Case-insensitive parsers used by the CLI and the JSON readers.
namespace detail {
inline bool iequals(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; };
    if (lower(a[i]) != lower(b[i])) return false;
  }
  return true;
}
}  // namespace detail

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const std::array<Enum, N>& values) {
  for (Enum v : values)
    if (detail::iequals(to_string(v), text)) return v;
  return std::nullopt;
}

inline constexpr std::array kAllCategories{SweepCategory::Camera, SweepCategory::Light,
                                           SweepCategory::Weather, SweepCategory::Sensor};
inline constexpr std::array kAllScenes{Scene::City, Scene::Desert, Scene::Forest, Scene::Grass};
inline constexpr std::array kAllSensors{SensorStyle::Rgb, SensorStyle::Night,
                                        SensorStyle::Thermal};

inline std::optional<SuperCategory> parse_super(std::string_view text) {
  if (detail::iequals(text, "air")) return SuperCategory::Air;
  if (detail::iequals(text, "ground")) return SuperCategory::Ground;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parameter grids
// ---------------------------------------------------------------------------

// `steps` equally spaced values from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out[i] = steps == 1 ? lo
                        : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return out;
}

struct Grids {
  static std::vector<double> camera_distance(SuperCategory s) {
    return s == SuperCategory::Air ? linspace(70.0, 350.0, 4) : linspace(15.0, 75.0, 4);
  }
  static std::vector<double> camera_elevation() { return linspace(5.0, 85.0, 4); }
  static std::vector<double> camera_azimuth() { return linspace(0.0, 240.0, 3); }
  static std::vector<double> light_intensity() { return linspace(10.0, 100.0, 3); }
  static std::vector<double> light_elevation() { return linspace(5.0, 90.0, 3); }
  static std::vector<double> light_azimuth() { return linspace(0.0, 180.0, 3); }
  static std::vector<double> wind() { return {0.0, 10.0}; }
};

struct WeatherState {
  bool rain = false;
  double wind = 0.0;

  friend bool operator==(const WeatherState&, const WeatherState&) = default;
};

// Dry, rain without wind, rain with wind: wind only varies when it rains.
inline std::vector<WeatherState> weather_states() {
  std::vector<WeatherState> out{{false, 0.0}};
  for (double w : Grids::wind()) out.push_back({true, w});
  return out;
}

struct SweepSpec {
  SweepCategory category = SweepCategory::Camera;
  SuperCategory super = SuperCategory::Ground;
  Scene scene = Scene::City;
};

struct SweepPoint {
  SweepCategory category = SweepCategory::Camera;
  SuperCategory super = SuperCategory::Ground;
  Scene scene = Scene::City;
  std::size_t grid_index = 0;

  double camera_distance = 15.0;  // metres
  double camera_elevation = 5.0;  // degrees
  double camera_azimuth = 0.0;    // degrees
  double light_intensity = 100.0; // percent
  double light_elevation = 90.0;  // degrees
  double light_azimuth = 0.0;     // degrees
  WeatherState weather;
  SensorStyle sensor = SensorStyle::Rgb;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

// SplitMix64 finaliser; derives independent per-item seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {
template <typename T>
const T& pick(const std::vector<T>& values, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, values.size() - 1);
  return values[dist(rng)];
}
}  // namespace detail

// Full Cartesian grid of the category's varied parameters. Everything else is
// drawn uniformly from its own declared grid with a per-point seeded stream.
inline std::vector<SweepPoint> enumerate_sweep(const SweepSpec& spec, std::uint64_t seed) {
  std::vector<SweepPoint> points;
  auto base = [&](std::size_t index) {
    std::mt19937_64 rng(mix_seed(seed ^ 0x5357454550ULL, index));
    SweepPoint p;
    p.category = spec.category;
    p.super = spec.super;
    p.scene = spec.scene;
    p.grid_index = index;
    p.camera_distance = detail::pick(Grids::camera_distance(spec.super), rng);
    p.camera_elevation = detail::pick(Grids::camera_elevation(), rng);
    p.camera_azimuth = detail::pick(Grids::camera_azimuth(), rng);
    p.light_intensity = detail::pick(Grids::light_intensity(), rng);
    p.light_elevation = detail::pick(Grids::light_elevation(), rng);
    p.light_azimuth = detail::pick(Grids::light_azimuth(), rng);
    p.weather = detail::pick(weather_states(), rng);
    p.sensor = detail::pick(std::vector<SensorStyle>(kAllSensors.begin(), kAllSensors.end()), rng);
    return p;
  };

  switch (spec.category) {
    case SweepCategory::Camera:
      for (double d : Grids::camera_distance(spec.super))
        for (double e : Grids::camera_elevation())
          for (double a : Grids::camera_azimuth()) {
            SweepPoint p = base(points.size());
            p.camera_distance = d;
            p.camera_elevation = e;
            p.camera_azimuth = a;
            points.push_back(p);
          }
      break;
    case SweepCategory::Light:
      for (double i : Grids::light_intensity())
        for (double e : Grids::light_elevation())
          for (double a : Grids::light_azimuth()) {
            SweepPoint p = base(points.size());
            p.light_intensity = i;
            p.light_elevation = e;
            p.light_azimuth = a;
            points.push_back(p);
          }
      break;
    case SweepCategory::Weather:
      for (const WeatherState& w : weather_states()) {
        SweepPoint p = base(points.size());
        p.weather = w;
        points.push_back(p);
      }
      break;
    case SweepCategory::Sensor:
      for (SensorStyle s : {SensorStyle::Night, SensorStyle::Thermal}) {
        SweepPoint p = base(points.size());
        p.sensor = s;
        points.push_back(p);
      }
      break;
  }
  return points;
}

// Heatmap/offset noise level associated with a sweep point's conditions.
inline double preset_noise_level(const SweepPoint& p) noexcept {
  double level = 0.0;
  if (p.weather.rain) level += 0.01;
  if (p.weather.wind > 0.0) level += 0.01;
  if (p.light_intensity <= 10.0) level += 0.01;
  if (p.sensor == SensorStyle::Night) level += 0.03;
  if (p.sensor == SensorStyle::Thermal) level += 0.05;
  return level;
}

// ---------------------------------------------------------------------------
// Scene synthesis
// ---------------------------------------------------------------------------

struct ClassPrior {
  ClassInfo info;
  Dims3 dims;  // typical (w, h, l), metres
};

// Synthesis-only constants, not measured values.
inline std::vector<ClassPrior> default_priors() {
  return {{{"Car", SuperCategory::Ground}, {1.8, 1.6, 4.2}},
          {{"Van", SuperCategory::Ground}, {2.0, 2.1, 5.0}},
          {{"Drone", SuperCategory::Air}, {3.0, 1.0, 3.0}},
          {{"Helicopter", SuperCategory::Air}, {2.5, 3.0, 10.0}}};
}

inline ClassTaxonomy default_taxonomy() {
  std::vector<ClassInfo> classes;
  for (const auto& p : default_priors()) classes.push_back(p.info);
  return ClassTaxonomy(std::move(classes));
}

struct SynthConfig {
  std::size_t image_width = 1242;
  std::size_t image_height = 375;
  CameraIntrinsics camera = CameraIntrinsics::pinhole(721.5377, 721.5377, 609.5593, 172.854);
  std::vector<ClassPrior> priors = default_priors();
  std::size_t stride = 1;         // feature-map stride the scene must render at
  double edge_margin_px = 2.0;    // projected hulls stay this far inside the image
  double max_pair_iou = 0.1;
  std::size_t min_keypoint_separation = 3;  // cells, same class and kind
  std::size_t max_attempts = 2000;          // per object
  double distance_jitter = 0.10;            // relative
  double dims_jitter = 0.05;                // relative
  double azimuth_jitter_deg = 10.0;

  ClassTaxonomy taxonomy() const {
    std::vector<ClassInfo> classes;
    for (const auto& p : priors) classes.push_back(p.info);
    return ClassTaxonomy(std::move(classes));
  }
  std::size_t feature_width() const noexcept { return (image_width + stride - 1) / stride; }
  std::size_t feature_height() const noexcept { return (image_height + stride - 1) / stride; }
};

struct SceneObject {
  Box3D box3d;
  Box2D box2d;  // project_box3d(camera, box3d)

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneSample {
  std::string id;
  SweepPoint point;
  CameraIntrinsics camera;
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::vector<SceneObject> objects;

  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

inline std::string frame_id(std::size_t index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

// Image-pixel keypoints of a 2D box: top-left, bottom-right, center.
inline std::array<std::pair<double, double>, 3> box_keypoints(const Box2D& b) {
  return {std::pair{b.x_min, b.y_min}, std::pair{b.x_max, b.y_max}, b.center()};
}

namespace detail {
inline std::pair<std::size_t, std::size_t> cell_of(std::pair<double, double> px,
                                                   std::size_t stride) {
  const double s = static_cast<double>(stride);
  return {static_cast<std::size_t>(std::floor(px.second / s)),
          static_cast<std::size_t>(std::floor(px.first / s))};
}
}  // namespace detail

// Places n_objects class-labelled boxes at the point's camera distance (with
// relative jitter) whose projections lie inside the image, overlap pairwise
// below max_pair_iou and keep same-class keypoints apart on the feature grid.
inline SceneSample generate_scene(const SweepPoint& point, std::uint64_t seed,
                                  std::size_t n_objects, const SynthConfig& cfg = {},
                                  std::string id = "000000") {
  if (n_objects == 0) throw GenerationError("generate_scene: n_objects must be >= 1");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < cfg.priors.size(); ++i)
    if (cfg.priors[i].info.super == point.super) candidates.push_back(i);
  if (candidates.empty()) {
    throw GenerationError("generate_scene: no class of super-category " +
                          std::string(det3d::to_string(point.super)));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto jitter = [&](double rel) { return 1.0 + rel * (2.0 * unit(rng) - 1.0); };

  SceneSample sample;
  sample.id = std::move(id);
  sample.point = point;
  sample.camera = cfg.camera;
  sample.image_width = cfg.image_width;
  sample.image_height = cfg.image_height;

  const double margin = cfg.edge_margin_px;
  const double w_img = static_cast<double>(cfg.image_width);
  const double h_img = static_cast<double>(cfg.image_height);

  for (std::size_t k = 0; k < n_objects; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const std::size_t cls = detail::pick(candidates, rng);
      const Dims3& prior = cfg.priors[cls].dims;
      const Dims3 dims{prior.w * jitter(cfg.dims_jitter), prior.h * jitter(cfg.dims_jitter),
                       prior.l * jitter(cfg.dims_jitter)};
      const Orientation orient{
          point.camera_azimuth + cfg.azimuth_jitter_deg * (2.0 * unit(rng) - 1.0),
          point.camera_elevation, 0.0};
      const double z = point.camera_distance * jitter(cfg.distance_jitter);
      const geometry::Pixel target{margin + unit(rng) * (w_img - 2.0 * margin),
                                   margin + unit(rng) * (h_img - 2.0 * margin)};
      const Vec3 center = geometry::back_project(cfg.camera, target, z);
      const Box3D box3d(center, dims, orient, cls, 1.0);

      Box2D box2d;
      try {
        box2d = geometry::project_box3d(cfg.camera, box3d);
      } catch (const GeometryError&) {
        continue;
      }
      if (box2d.x_min < margin || box2d.y_min < margin || box2d.x_max > w_img - margin ||
          box2d.y_max > h_img - margin) {
        continue;
      }
      bool ok = true;
      const auto kps = box_keypoints(box2d);
      for (const auto& other : sample.objects) {
        if (metrics::iou(box2d, other.box2d) >= cfg.max_pair_iou) {
          ok = false;
          break;
        }
        if (other.box2d.class_id != cls) continue;
        const auto other_kps = box_keypoints(other.box2d);
        for (std::size_t kind = 0; kind < 3 && ok; ++kind) {
          const auto [r0, c0] = detail::cell_of(kps[kind], cfg.stride);
          const auto [r1, c1] = detail::cell_of(other_kps[kind], cfg.stride);
          const std::size_t dr = r0 > r1 ? r0 - r1 : r1 - r0;
          const std::size_t dc = c0 > c1 ? c0 - c1 : c1 - c0;
          if (std::max(dr, dc) < cfg.min_keypoint_separation) ok = false;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      sample.objects.push_back({box3d, box2d});
      placed = true;
    }
    if (!placed) {
      throw GenerationError("generate_scene: could not place object " + std::to_string(k + 1) +
                            " of " + std::to_string(n_objects) + " for sweep point " +
                            std::string(to_string(point.category)) + "/" +
                            std::string(det3d::to_string(point.super)) + " #" +
                            std::to_string(point.grid_index) + " (distance " +
                            std::to_string(point.camera_distance) + " m, elevation " +
                            std::to_string(point.camera_elevation) + " deg)");
    }
  }
  return sample;
}

// Every sweep point repeated `repeats` times; frame ids are sequential and
// each sample's stream is seeded from (seed, frame index) only, so any subset
// can be regenerated independently.
inline std::vector<SceneSample> generate_dataset(const SweepSpec& spec, std::uint64_t seed,
                                                 std::size_t repeats, std::size_t n_objects,
                                                 const SynthConfig& cfg = {}) {
  std::vector<SceneSample> out;
  const auto points = enumerate_sweep(spec, seed);
  for (const auto& p : points) {
    for (std::size_t r = 0; r < repeats; ++r) {
      const std::size_t index = out.size();
      out.push_back(generate_scene(p, mix_seed(seed, index), n_objects, cfg, frame_id(index)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ideal maps
// ---------------------------------------------------------------------------

struct RenderConfig {
  double sigma = 1.5;            // Gaussian bump width, feature cells
  std::size_t orientation_bins = 4;
};

// Maps a perfect network would emit for the sample. Each object k gets
// Gaussian bumps (peak 1) at floor(keypoint / stride) on its class channel,
// exact fractional remainders in the offset maps, tag k + 1 in both corner
// embeddings, and depth / dims / MultiBin targets at its center cell.
inline MapBundle render_ideal_maps(const SceneSample& sample, std::size_t height,
                                   std::size_t width, std::size_t stride,
                                   const ClassTaxonomy& taxonomy, const RenderConfig& rc = {}) {
  if (stride == 0) throw RenderError("render: stride must be positive");
  if (!(rc.sigma > 0.0)) throw RenderError("render: sigma must be positive");
  const std::size_t classes = taxonomy.size();
  const std::size_t bins = rc.orientation_bins;
  MapBundle b{FeatureMap(height, width, classes, MapRole::Heatmap),
              FeatureMap(height, width, classes, MapRole::Heatmap),
              FeatureMap(height, width, classes, MapRole::Heatmap),
              FeatureMap(height, width, 1, MapRole::Embedding),
              FeatureMap(height, width, 1, MapRole::Embedding),
              FeatureMap(height, width, 2, MapRole::Offset),
              FeatureMap(height, width, 2, MapRole::Offset),
              FeatureMap(height, width, 2, MapRole::Offset),
              FeatureMap(height, width, 1),
              FeatureMap(height, width, 3),
              FeatureMap(height, width, 9 * bins)};
  std::array<FeatureMap*, 3> heat{&b.heat_tl, &b.heat_br, &b.heat_ct};
  std::array<FeatureMap*, 3> offs{&b.offset_tl, &b.offset_br, &b.offset_ct};
  const auto centers = geometry::uniform_bin_centers(bins);
  const double s = static_cast<double>(stride);
  const int radius = static_cast<int>(std::ceil(3.0 * rc.sigma));
  const double denom = 2.0 * rc.sigma * rc.sigma;

  for (std::size_t k = 0; k < sample.objects.size(); ++k) {
    const SceneObject& obj = sample.objects[k];
    const std::size_t cls = obj.box2d.class_id;
    if (cls >= classes) throw RenderError("render: class id outside taxonomy");
    const auto kps = box_keypoints(obj.box2d);
    std::array<std::pair<std::size_t, std::size_t>, 3> cells{};

    for (std::size_t kind = 0; kind < 3; ++kind) {
      const double fx = kps[kind].first / s;
      const double fy = kps[kind].second / s;
      if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(width) &&
            fy < static_cast<double>(height))) {
        throw RenderError("render: object " + std::to_string(k) + " keypoint (" +
                          std::to_string(kps[kind].first) + ", " +
                          std::to_string(kps[kind].second) + ") outside the " +
                          std::to_string(height) + "x" + std::to_string(width) + " feature map");
      }
      const std::size_t col = static_cast<std::size_t>(std::floor(fx));
      const std::size_t row = static_cast<std::size_t>(std::floor(fy));
      cells[kind] = {row, col};

      FeatureMap& hm = *heat[kind];
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          const long rr = static_cast<long>(row) + dr;
          const long cc = static_cast<long>(col) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(height) || cc >= static_cast<long>(width))
            continue;
          const float v = static_cast<float>(std::exp(-(dr * dr + dc * dc) / denom));
          float& cell = hm(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), cls);
          cell = std::max(cell, v);
        }
      }
      (*offs[kind])(row, col, 0) = static_cast<float>(fx - static_cast<double>(col));
      (*offs[kind])(row, col, 1) = static_cast<float>(fy - static_cast<double>(row));
    }

    const float tag = static_cast<float>(k + 1);
    b.embed_tl(cells[0].first, cells[0].second, 0) = tag;
    b.embed_br(cells[1].first, cells[1].second, 0) = tag;

    const auto [cr, cc] = cells[2];
    (*b.depth)(cr, cc, 0) = static_cast<float>(geometry::encode_depth(obj.box3d.center.z));
    (*b.dims)(cr, cc, 0) = static_cast<float>(obj.box3d.dims.w);
    (*b.dims)(cr, cc, 1) = static_cast<float>(obj.box3d.dims.h);
    (*b.dims)(cr, cc, 2) = static_cast<float>(obj.box3d.dims.l);
    const std::array<double, 3> angles{obj.box3d.orientation.azimuth,
                                       obj.box3d.orientation.elevation,
                                       obj.box3d.orientation.roll};
    for (std::size_t a = 0; a < 3; ++a) {
      const auto mb = geometry::encode_multibin(angles[a], centers);
      for (std::size_t i = 0; i < bins; ++i) {
        auto& o = *b.orientation;
        o(cr, cc, MapBundle::orientation_channel(bins, a, i, 0)) = static_cast<float>(mb.bins[i].confidence);
        o(cr, cc, MapBundle::orientation_channel(bins, a, i, 1)) = static_cast<float>(mb.bins[i].cos_delta);
        o(cr, cc, MapBundle::orientation_channel(bins, a, i, 2)) = static_cast<float>(mb.bins[i].sin_delta);
      }
    }
  }
  return b;
}

// Seeded Gaussian corruption: heatmaps get sigma = noise_level (clamped to
// [0, 1]), offsets sigma = noise_level, embeddings sigma = noise_level / 10.
// Regression heads are left untouched. noise_level 0 returns an exact copy.
inline MapBundle corrupt_maps(const MapBundle& bundle, double noise_level, std::uint64_t seed) {
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw DomainError("corrupt_maps: noise_level must be finite and >= 0");
  }
  MapBundle out = bundle;
  if (noise_level == 0.0) return out;
  std::mt19937_64 rng(seed);
  auto perturb = [&](FeatureMap& m, double sigma, bool clamp01) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (float& v : m.data()) {
      double x = static_cast<double>(v) + noise(rng);
      if (clamp01) x = std::clamp(x, 0.0, 1.0);
      v = static_cast<float>(x);
    }
  };
  perturb(out.heat_tl, noise_level, true);
  perturb(out.heat_br, noise_level, true);
  perturb(out.heat_ct, noise_level, true);
  perturb(out.offset_tl, noise_level, false);
  perturb(out.offset_br, noise_level, false);
  perturb(out.offset_ct, noise_level, false);
  perturb(out.embed_tl, noise_level / 10.0, false);
  perturb(out.embed_br, noise_level / 10.0, false);
  return out;
}

}  // namespace det3d::synth
