#pragma once

// Lifting 2D detections to 3D: depth and orientation decoding, dimension
// loss, pinhole projection and 2D-box-constrained center recovery.
//
// Rotation convention: R = Rz(roll) * Rx(elevation) * Ry(azimuth), camera frame
// with x right, y down, z forward. Azimuth is yaw about the vertical (y) axis.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "det3d/core.hpp"

namespace det3d::geometry {

// ---------------------------------------------------------------------------
// MultiBin orientation
// ---------------------------------------------------------------------------

struct MultiBinEntry {
  double confidence = 0.0;
  double cos_delta = 1.0;
  double sin_delta = 0.0;
};

struct MultiBinOutput {
  std::vector<MultiBinEntry> bins;
  std::vector<double> bin_centers;  // degrees, strictly increasing in [-180, 180)

  void validate() const {
    if (bins.empty()) throw DomainError("multibin: need at least one bin");
    if (bins.size() != bin_centers.size()) {
      throw DomainError("multibin: " + std::to_string(bins.size()) + " bins but " +
                        std::to_string(bin_centers.size()) + " centers");
    }
    for (std::size_t i = 0; i < bin_centers.size(); ++i) {
      const double c = bin_centers[i];
      if (!(c >= -180.0 && c < 180.0)) throw DomainError("multibin: bin center outside [-180, 180)");
      if (i > 0 && !(c > bin_centers[i - 1])) {
        throw DomainError("multibin: bin centers must be strictly increasing");
      }
    }
    for (const auto& b : bins) {
      if (!std::isfinite(b.cos_delta) || !std::isfinite(b.sin_delta)) {
        throw DomainError("multibin: non-finite residual");
      }
    }
  }
};

// N equal bins covering the circle, centered at -180 + (i + 1/2) * 360 / N.
inline std::vector<double> uniform_bin_centers(std::size_t n) {
  if (n == 0) throw DomainError("multibin: need at least one bin");
  std::vector<double> centers(n);
  const double width = 360.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) centers[i] = -180.0 + (static_cast<double>(i) + 0.5) * width;
  return centers;
}

// Argmax-confidence bin plus that bin's atan2 residual.
inline double decode_multibin(const MultiBinOutput& out) {
  out.validate();
  std::size_t best = out.bins.size();
  for (std::size_t i = 0; i < out.bins.size(); ++i) {
    const double c = out.bins[i].confidence;
    if (!std::isfinite(c)) continue;
    if (best == out.bins.size() || c > out.bins[best].confidence) best = i;
  }
  if (best == out.bins.size()) throw DomainError("multibin: no finite confidence");
  const MultiBinEntry& b = out.bins[best];
  const double delta = rad_to_deg(std::atan2(b.sin_delta, b.cos_delta));
  return normalize_angle(out.bin_centers[best] + delta);
}

// Ideal MultiBin target for an angle: the circularly nearest bin gets
// confidence 1, every bin carries its own (cos, sin) residual.
inline MultiBinOutput encode_multibin(double angle_deg, const std::vector<double>& centers) {
  MultiBinOutput out;
  out.bin_centers = centers;
  out.bins.resize(centers.size());
  std::size_t nearest = 0;
  double nearest_dist = 1e300;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double delta = normalize_angle(angle_deg - centers[i]);
    const double rad = deg_to_rad(delta);
    out.bins[i] = {0.0, std::cos(rad), std::sin(rad)};
    if (std::abs(delta) < nearest_dist) {
      nearest_dist = std::abs(delta);
      nearest = i;
    }
  }
  out.bins[nearest].confidence = 1.0;
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Depth and dimensions
// ---------------------------------------------------------------------------

// Log-space depth: metres = exp(raw).
inline double decode_depth(double raw) {
  if (!std::isfinite(raw)) throw DomainError("decode_depth: non-finite raw value");
  const double d = std::exp(raw);
  if (!std::isfinite(d) || !(d > 0.0)) {
    throw RangeError("decode_depth: exp(" + std::to_string(raw) + ") not representable");
  }
  return d;
}

inline double encode_depth(double metres) {
  if (!(metres > 0.0) || !std::isfinite(metres)) {
    throw DomainError("encode_depth: depth must be finite and positive");
  }
  return std::log(metres);
}

// Squared error summed over (w, h, l) for one sample.
inline double dims_loss(const Dims3& pred, const Dims3& truth) noexcept {
  const double dw = pred.w - truth.w;
  const double dh = pred.h - truth.h;
  const double dl = pred.l - truth.l;
  return dw * dw + dh * dh + dl * dl;
}

// Mean over samples of the per-sample component sum.
inline double dims_loss(std::span<const Dims3> pred, std::span<const Dims3> truth) {
  if (pred.size() != truth.size()) {
    throw DomainError("dims_loss: batch size mismatch");
  }
  if (pred.empty()) throw DomainError("dims_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += dims_loss(pred[i], truth[i]);
  return sum / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

inline Pixel project_point(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z > 0.0)) throw GeometryError("project_point: point behind camera (z <= 0)");
  const auto& m = k.matrix();
  const double u = m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3];
  const double v = m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7];
  const double w = m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11];
  if (w == 0.0) throw GeometryError("project_point: degenerate projection (w = 0)");
  return {u / w, v / w};
}

// Point at camera depth z that projects to (u, v). Solves the two linear
// equations left after eliminating the homogeneous scale.
inline Vec3 back_project(const CameraIntrinsics& k, Pixel px, double z) {
  if (!(z > 0.0)) throw DomainError("back_project: depth must be positive");
  const auto& m = k.matrix();
  const double a11 = m[0] - px.u * m[8];
  const double a12 = m[1] - px.u * m[9];
  const double a21 = m[4] - px.v * m[8];
  const double a22 = m[5] - px.v * m[9];
  const double b1 = px.u * (m[10] * z + m[11]) - m[2] * z - m[3];
  const double b2 = px.v * (m[10] * z + m[11]) - m[6] * z - m[7];
  const double det = a11 * a22 - a12 * a21;
  if (det == 0.0) throw GeometryError("back_project: singular camera matrix");
  return {(b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det, z};
}

using Mat3 = std::array<double, 9>;

inline Mat3 rotation_matrix(const Orientation& o) {
  const double ay = deg_to_rad(o.azimuth);
  const double ax = deg_to_rad(o.elevation);
  const double az = deg_to_rad(o.roll);
  const Mat3 ry{std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay)};
  const Mat3 rx{1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax)};
  const Mat3 rz{std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1};
  auto mul = [](const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
  };
  return mul(rz, mul(rx, ry));
}

// Object frame: length along x, height along y, width along z (the KITTI
// convention, so azimuth is directly KITTI's rotation_y). Corner i has local
// coordinates (+-l/2, +-h/2, +-w/2); bit 0 of i selects the sign of x
// (set = +), bit 1 of y, bit 2 of z.
inline std::array<Vec3, 8> box3d_corners(const Box3D& box) {
  const Mat3 r = rotation_matrix(box.orientation);
  std::array<Vec3, 8> corners;
  for (std::size_t i = 0; i < 8; ++i) {
    const double x = ((i & 1) ? 0.5 : -0.5) * box.dims.l;
    const double y = ((i & 2) ? 0.5 : -0.5) * box.dims.h;
    const double z = ((i & 4) ? 0.5 : -0.5) * box.dims.w;
    corners[i] = {r[0] * x + r[1] * y + r[2] * z + box.center.x,
                  r[3] * x + r[4] * y + r[5] * z + box.center.y,
                  r[6] * x + r[7] * y + r[8] * z + box.center.z};
  }
  return corners;
}

// Tight axis-aligned hull of the projected corners. No image clipping.
inline Box2D project_box3d(const CameraIntrinsics& k, const Box3D& box) {
  double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
  for (const Vec3& c : box3d_corners(box)) {
    if (!(c.z > 0.0)) throw GeometryError("project_box3d: corner behind camera");
    const Pixel p = project_point(k, c);
    u0 = std::min(u0, p.u);
    v0 = std::min(v0, p.v);
    u1 = std::max(u1, p.u);
    v1 = std::max(v1, p.v);
  }
  return Box2D(u0, v0, u1, v1, box.class_id, box.score);
}

// Places the box center on the ray through the 2D box center at the given
// depth, then applies one image-plane correction so the re-projected hull
// center lands on the 2D box center.
inline Box3D fit_center_from_2d(const CameraIntrinsics& k, const Box2D& box2d, const Dims3& dims,
                                const Orientation& orientation, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw DomainError("fit_center_from_2d: depth must be finite and positive");
  }
  const auto [uc, vc] = box2d.center();
  const Vec3 initial = back_project(k, {uc, vc}, depth);
  auto hull_center = [&](const Vec3& c) {
    return project_box3d(k, Box3D(c, dims, orientation)).center();
  };

  // One correction along the image plane. The hull center does not track the
  // box center 1:1 under perspective, so the residual goes through a
  // finite-difference Jacobian of hull center w.r.t. (x, y).
  const auto [hu, hv] = hull_center(initial);
  const double eps = 1e-4 * depth;
  const auto [ux, vx] = hull_center({initial.x + eps, initial.y, depth});
  const auto [uy, vy] = hull_center({initial.x, initial.y + eps, depth});
  const double a = (ux - hu) / eps, b = (uy - hu) / eps;
  const double c = (vx - hv) / eps, d = (vy - hv) / eps;
  const double det = a * d - b * c;
  const double ru = uc - hu, rv = vc - hv;
  Vec3 corrected = initial;
  if (std::abs(det) > 1e-12 * (a * a + b * b + c * c + d * d)) {
    corrected.x += (d * ru - b * rv) / det;
    corrected.y += (a * rv - c * ru) / det;
  } else {
    const Pixel anchor = project_point(k, initial);
    corrected = back_project(k, {anchor.u + ru, anchor.v + rv}, depth);
  }
  return Box3D(corrected, dims, orientation, box2d.class_id, box2d.score);
}

}  // namespace det3d::geometry
