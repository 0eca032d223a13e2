#pragma once

// Full per-frame inference path over a MapBundle: peaks, grouping, offset
// refinement and center validation, then (when the bundle carries regression
// heads and a camera is known) lifting each box to 3D.

#include <optional>
#include <vector>

#include "det3d/bundle.hpp"
#include "det3d/core.hpp"
#include "det3d/decode.hpp"
#include "det3d/geometry3d.hpp"

namespace det3d {

struct DecodeConfig {
  decode::PeakExtractionConfig peaks;
  decode::GroupingConfig grouping;
  std::size_t stride = 1;

  void validate() const {
    peaks.validate();
    grouping.validate();
    if (stride == 0) throw ConfigError("stride must be positive");
  }
};

struct Detection {
  decode::DecodedBox decoded;
  std::optional<Box3D> box3d;

  const Box2D& box2d() const noexcept { return decoded.box; }
};

inline std::vector<decode::DecodedBox> decode_boxes(const MapBundle& bundle,
                                                    const DecodeConfig& cfg,
                                                    const ClassTaxonomy& taxonomy) {
  cfg.validate();
  bundle.validate(taxonomy);
  auto tl = decode::extract_peaks(bundle.heat_tl, cfg.peaks, KeypointKind::TopLeft);
  auto br = decode::extract_peaks(bundle.heat_br, cfg.peaks, KeypointKind::BottomRight);
  const auto ct = decode::extract_peaks(bundle.heat_ct, cfg.peaks, KeypointKind::Center);
  decode::attach_tags(tl, bundle.embed_tl);
  decode::attach_tags(br, bundle.embed_br);
  const auto pairs = decode::group_corners(tl, br, cfg.grouping);
  const decode::OffsetMaps<float> offsets{bundle.offset_tl, bundle.offset_br, bundle.offset_ct};
  return decode::assemble_boxes(pairs, ct, offsets, cfg.stride);
}

// Reads depth, dims and the three MultiBin heads at the center keypoint cell
// and fits the 3D center against the 2D box. nullopt when the bundle has no
// regression heads or the fit is geometrically invalid.
inline std::optional<Box3D> lift_to_3d(const MapBundle& bundle, const decode::DecodedBox& det,
                                       const CameraIntrinsics& camera) {
  if (!bundle.has_3d()) return std::nullopt;
  const std::size_t r = det.center.row;
  const std::size_t c = det.center.col;
  const std::size_t bins = bundle.orientation_bins();
  const auto centers = geometry::uniform_bin_centers(bins);

  std::array<double, 3> angles{};
  for (std::size_t a = 0; a < 3; ++a) {
    geometry::MultiBinOutput mb;
    mb.bin_centers = centers;
    for (std::size_t i = 0; i < bins; ++i) {
      auto at = [&](std::size_t field) {
        return static_cast<double>(
            bundle.orientation->at(r, c, MapBundle::orientation_channel(bins, a, i, field)));
      };
      mb.bins.push_back({at(0), at(1), at(2)});
    }
    angles[a] = geometry::decode_multibin(mb);
  }
  const Dims3 dims{bundle.dims->at(r, c, 0), bundle.dims->at(r, c, 1), bundle.dims->at(r, c, 2)};
  if (!(dims.w > 0.0 && dims.h > 0.0 && dims.l > 0.0)) return std::nullopt;
  try {
    const double depth = geometry::decode_depth(bundle.depth->at(r, c, 0));
    return geometry::fit_center_from_2d(camera, det.box, dims,
                                        {angles[0], angles[1], angles[2]}, depth);
  } catch (const GeometryError&) {
    return std::nullopt;
  } catch (const RangeError&) {
    return std::nullopt;
  }
}

inline std::vector<Detection> decode_frame(const MapBundle& bundle, const DecodeConfig& cfg,
                                           const ClassTaxonomy& taxonomy,
                                           const std::optional<CameraIntrinsics>& camera) {
  std::vector<Detection> out;
  for (auto& box : decode_boxes(bundle, cfg, taxonomy)) {
    std::optional<Box3D> b3;
    if (camera) b3 = lift_to_3d(bundle, box, *camera);
    out.push_back({std::move(box), b3});
  }
  return out;
}

}  // namespace det3d
