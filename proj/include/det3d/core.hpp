#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "det3d/error.hpp"

namespace det3d {

// ---------------------------------------------------------------------------
// Angles
// ---------------------------------------------------------------------------

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) noexcept { return deg * (kPi / 180.0); }
inline constexpr double rad_to_deg(double rad) noexcept { return rad * (180.0 / kPi); }

// Wraps an angle in degrees into [-180, 180). Idempotent.
inline double normalize_angle(double deg) {
  if (!std::isfinite(deg)) {
    throw DomainError("normalize_angle: non-finite angle");
  }
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r - 180.0;
}

// ---------------------------------------------------------------------------
// Feature maps
// ---------------------------------------------------------------------------

enum class MapRole : std::uint8_t { Heatmap = 0, Embedding = 1, Offset = 2, Generic = 3 };

inline std::string_view to_string(MapRole role) noexcept {
  switch (role) {
    case MapRole::Heatmap: return "heatmap";
    case MapRole::Embedding: return "embedding";
    case MapRole::Offset: return "offset";
    case MapRole::Generic: return "generic";
  }
  return "unknown";
}

// Dense H x W x C grid stored row-major over (row, col, channel).
template <typename T>
class BasicFeatureMap {
 public:
  using value_type = T;

  BasicFeatureMap(std::size_t height, std::size_t width, std::size_t channels,
                  MapRole role = MapRole::Generic)
      : height_(height), width_(width), channels_(channels), role_(role) {
    check_shape();
    data_.assign(height_ * width_ * channels_, T{});
  }

  BasicFeatureMap(std::size_t height, std::size_t width, std::size_t channels,
                  std::vector<T> data, MapRole role = MapRole::Generic)
      : height_(height), width_(width), channels_(channels), role_(role),
        data_(std::move(data)) {
    check_shape();
    if (data_.size() != height_ * width_ * channels_) {
      throw ConfigError("feature map: data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(height_) + "x" +
                        std::to_string(width_) + "x" + std::to_string(channels_));
    }
    if (role_ == MapRole::Heatmap) validate_heatmap_range();
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  MapRole role() const noexcept { return role_; }

  std::size_t index(std::size_t row, std::size_t col, std::size_t channel) const noexcept {
    return (row * width_ + col) * channels_ + channel;
  }

  // Unchecked access.
  const T& operator()(std::size_t row, std::size_t col, std::size_t channel) const noexcept {
    return data_[index(row, col, channel)];
  }
  T& operator()(std::size_t row, std::size_t col, std::size_t channel) noexcept {
    return data_[index(row, col, channel)];
  }

  // Bounds-checked access; the error names the offending axis.
  const T& at(std::size_t row, std::size_t col, std::size_t channel) const {
    check_index(row, col, channel);
    return (*this)(row, col, channel);
  }
  T& at(std::size_t row, std::size_t col, std::size_t channel) {
    check_index(row, col, channel);
    return (*this)(row, col, channel);
  }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  // Copies one channel into a single-channel map of the same role.
  BasicFeatureMap channel(std::size_t ch) const {
    check_channel(ch);
    BasicFeatureMap out(height_, width_, 1, role_);
    for (std::size_t r = 0; r < height_; ++r)
      for (std::size_t c = 0; c < width_; ++c) out(r, c, 0) = (*this)(r, c, ch);
    return out;
  }

  void check_channel(std::size_t ch) const {
    if (ch >= channels_) {
      throw BoundsError("feature map: channel index " + std::to_string(ch) +
                        " out of range [0, " + std::to_string(channels_) + ")");
    }
  }

  void validate_heatmap_range() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const T v = data_[i];
      if (!(v >= T{0} && v <= T{1})) {
        throw DomainError("heatmap value outside [0, 1] at flat index " + std::to_string(i));
      }
    }
  }

  friend bool operator==(const BasicFeatureMap&, const BasicFeatureMap&) = default;

 private:
  void check_shape() const {
    if (height_ == 0 || width_ == 0 || channels_ == 0) {
      throw ConfigError("feature map: every dimension must be >= 1");
    }
  }

  void check_index(std::size_t row, std::size_t col, std::size_t channel) const {
    if (row >= height_) {
      throw BoundsError("feature map: row index " + std::to_string(row) + " out of range [0, " +
                        std::to_string(height_) + ")");
    }
    if (col >= width_) {
      throw BoundsError("feature map: col index " + std::to_string(col) + " out of range [0, " +
                        std::to_string(width_) + ")");
    }
    check_channel(channel);
  }

  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  MapRole role_;
  std::vector<T> data_;
};

using FeatureMap = BasicFeatureMap<float>;

template <typename T>
const T& featuremap_get(const BasicFeatureMap<T>& map, std::size_t row, std::size_t col,
                        std::size_t channel) {
  return map.at(row, col, channel);
}

// ---------------------------------------------------------------------------
// Keypoints
// ---------------------------------------------------------------------------

enum class KeypointKind : std::uint8_t { TopLeft, BottomRight, Center };

inline std::string_view to_string(KeypointKind kind) noexcept {
  switch (kind) {
    case KeypointKind::TopLeft: return "top_left";
    case KeypointKind::BottomRight: return "bottom_right";
    case KeypointKind::Center: return "center";
  }
  return "unknown";
}

struct Keypoint {
  KeypointKind kind = KeypointKind::Center;
  std::size_t class_id = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double score = 0.0;
  double tag = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

namespace detail {
inline void check_score(double score, const char* who) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw DomainError(std::string(who) + ": score " + std::to_string(score) +
                      " outside [0, 1]");
  }
}
}  // namespace detail

// Axis-aligned image box in pixels. Zero-area boxes are allowed.
struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  std::size_t class_id = 0;
  double score = 1.0;

  Box2D() = default;
  Box2D(double x0, double y0, double x1, double y1, std::size_t cls = 0, double s = 1.0)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1), class_id(cls), score(s) {
    if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1))) {
      throw DomainError("Box2D: non-finite coordinate");
    }
    if (x0 > x1 || y0 > y1) {
      throw DomainError("Box2D: negative extent");
    }
    detail::check_score(s, "Box2D");
  }

  double width() const noexcept { return std::max(0.0, x_max - x_min); }
  double height() const noexcept { return std::max(0.0, y_max - y_min); }
  double area() const noexcept { return width() * height(); }
  std::pair<double, double> center() const noexcept {
    return {(x_min + x_max) * 0.5, (y_min + y_max) * 0.5};
  }

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(double s, const Vec3& v) noexcept { return {s * v.x, s * v.y, s * v.z}; }
  double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

// Box extents in metres.
struct Dims3 {
  double w = 1.0;
  double h = 1.0;
  double l = 1.0;

  friend bool operator==(const Dims3&, const Dims3&) = default;
};

// Euler angles in degrees.
struct Orientation {
  double azimuth = 0.0;
  double elevation = 0.0;
  double roll = 0.0;

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

// Oriented 3D box in the camera frame (x right, y down, z forward).
struct Box3D {
  Vec3 center;
  Dims3 dims;
  Orientation orientation;
  std::size_t class_id = 0;
  double score = 1.0;

  Box3D() : center{0.0, 0.0, 1.0} {}
  Box3D(Vec3 c, Dims3 d, Orientation o, std::size_t cls = 0, double s = 1.0)
      : center(c), dims(d), class_id(cls), score(s) {
    if (!(std::isfinite(c.x) && std::isfinite(c.y) && std::isfinite(c.z))) {
      throw DomainError("Box3D: non-finite center");
    }
    if (!(d.w > 0.0 && d.h > 0.0 && d.l > 0.0) ||
        !(std::isfinite(d.w) && std::isfinite(d.h) && std::isfinite(d.l))) {
      throw DomainError("Box3D: dimensions must be finite and positive");
    }
    if (!(c.z > 0.0)) {
      throw DomainError("Box3D: center must lie in front of the camera (z > 0)");
    }
    detail::check_score(s, "Box3D");
    orientation = {normalize_angle(o.azimuth), normalize_angle(o.elevation),
                   normalize_angle(o.roll)};
  }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

// 3x4 row-major projection matrix mapping camera-frame points to homogeneous
// pixel coordinates.
class CameraIntrinsics {
 public:
  CameraIntrinsics() : CameraIntrinsics(pinhole(1.0, 1.0, 0.0, 0.0)) {}

  explicit CameraIntrinsics(const std::array<double, 12>& p) : p_(p) {
    for (double v : p_) {
      if (!std::isfinite(v)) throw DomainError("CameraIntrinsics: non-finite matrix entry");
    }
    if (p_[0] == 0.0 || p_[5] == 0.0) {
      throw DomainError("CameraIntrinsics: focal entries must be nonzero");
    }
  }

  static CameraIntrinsics pinhole(double fx, double fy, double cx, double cy) {
    return CameraIntrinsics({fx, 0.0, cx, 0.0, 0.0, fy, cy, 0.0, 0.0, 0.0, 1.0, 0.0});
  }

  const std::array<double, 12>& matrix() const noexcept { return p_; }
  double operator()(std::size_t row, std::size_t col) const noexcept { return p_[row * 4 + col]; }

  double fx() const noexcept { return p_[0]; }
  double fy() const noexcept { return p_[5]; }
  double cx() const noexcept { return p_[2]; }
  double cy() const noexcept { return p_[6]; }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;

 private:
  std::array<double, 12> p_;
};

// ---------------------------------------------------------------------------
// Class taxonomy
// ---------------------------------------------------------------------------

enum class SuperCategory : std::uint8_t { Air, Ground };

inline std::string_view to_string(SuperCategory s) noexcept {
  return s == SuperCategory::Air ? "Air" : "Ground";
}

struct ClassInfo {
  std::string name;
  SuperCategory super = SuperCategory::Ground;

  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

// Ordered class list; the index of a class is its heatmap channel.
class ClassTaxonomy {
 public:
  ClassTaxonomy() = default;
  explicit ClassTaxonomy(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
    std::unordered_set<std::string> seen;
    for (const auto& c : classes_) {
      if (c.name.empty()) throw ConfigError("taxonomy: empty class name");
      if (!seen.insert(c.name).second) {
        throw ConfigError("taxonomy: duplicate class name '" + c.name + "'");
      }
    }
  }

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<ClassInfo>& classes() const noexcept { return classes_; }

  const ClassInfo& at(std::size_t id) const {
    if (id >= classes_.size()) {
      throw BoundsError("taxonomy: class id " + std::to_string(id) + " out of range");
    }
    return classes_[id];
  }
  const std::string& name(std::size_t id) const { return at(id).name; }
  SuperCategory super_of(std::size_t id) const { return at(id).super; }

  std::optional<std::size_t> index_of(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i].name == name) return i;
    }
    return std::nullopt;
  }

  // Heatmap channel count must equal the class count.
  template <typename T>
  void check_heatmap(const BasicFeatureMap<T>& map) const {
    if (map.channels() != classes_.size()) {
      throw ConfigError("heatmap has " + std::to_string(map.channels()) +
                        " channels but the taxonomy has " + std::to_string(classes_.size()) +
                        " classes");
    }
  }

  friend bool operator==(const ClassTaxonomy&, const ClassTaxonomy&) = default;

 private:
  std::vector<ClassInfo> classes_;
};

}  // namespace det3d
