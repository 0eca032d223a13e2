#pragma once

// One frame's worth of network-style output maps, plus their on-disk layout
// (one FMAP file per map inside a directory).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "det3d/core.hpp"
#include "det3d/fmap_io.hpp"

namespace det3d {

struct MapBundle {
  FeatureMap heat_tl;    // C channels
  FeatureMap heat_br;    // C channels
  FeatureMap heat_ct;    // C channels
  FeatureMap embed_tl;   // 1 channel
  FeatureMap embed_br;   // 1 channel
  FeatureMap offset_tl;  // 2 channels (o_x, o_y)
  FeatureMap offset_br;  // 2 channels
  FeatureMap offset_ct;  // 2 channels

  // Optional 3D regression heads, read at center keypoint cells.
  std::optional<FeatureMap> depth;        // 1 channel, log metres
  std::optional<FeatureMap> dims;         // 3 channels (w, h, l) metres
  std::optional<FeatureMap> orientation;  // 9*N channels, see orientation_channel()

  std::size_t height() const noexcept { return heat_tl.height(); }
  std::size_t width() const noexcept { return heat_tl.width(); }

  bool has_3d() const noexcept { return depth && dims && orientation; }

  std::size_t orientation_bins() const noexcept {
    return orientation ? orientation->channels() / 9 : 0;
  }

  // Channel of (angle a in {azimuth, elevation, roll}, bin i, field f in
  // {confidence, cos, sin}) in the orientation map.
  static std::size_t orientation_channel(std::size_t bins, std::size_t angle, std::size_t bin,
                                         std::size_t field) noexcept {
    return (angle * bins + bin) * 3 + field;
  }

  void validate(const ClassTaxonomy& taxonomy) const {
    taxonomy.check_heatmap(heat_tl);
    taxonomy.check_heatmap(heat_br);
    taxonomy.check_heatmap(heat_ct);
    auto same_grid = [&](const FeatureMap& m, const char* name) {
      if (m.height() != height() || m.width() != width()) {
        throw ConfigError(std::string(name) + " grid " + std::to_string(m.height()) + "x" +
                          std::to_string(m.width()) + " differs from heatmap grid " +
                          std::to_string(height()) + "x" + std::to_string(width()));
      }
    };
    auto channels = [&](const FeatureMap& m, const char* name, std::size_t c) {
      same_grid(m, name);
      if (m.channels() != c) {
        throw ConfigError(std::string(name) + " must have " + std::to_string(c) +
                          " channels, got " + std::to_string(m.channels()));
      }
    };
    same_grid(heat_br, "heatmap_br");
    same_grid(heat_ct, "heatmap_ct");
    channels(embed_tl, "embedding_tl", 1);
    channels(embed_br, "embedding_br", 1);
    channels(offset_tl, "offset_tl", 2);
    channels(offset_br, "offset_br", 2);
    channels(offset_ct, "offset_ct", 2);
    if (depth) channels(*depth, "depth", 1);
    if (dims) channels(*dims, "dims", 3);
    if (orientation) {
      same_grid(*orientation, "orientation");
      if (orientation->channels() % 9 != 0) {
        throw ConfigError("orientation channel count must be a multiple of 9");
      }
    }
  }

  friend bool operator==(const MapBundle&, const MapBundle&) = default;
};

namespace bundle_files {
inline constexpr const char* kHeatTl = "heatmap_tl.fmap";
inline constexpr const char* kHeatBr = "heatmap_br.fmap";
inline constexpr const char* kHeatCt = "heatmap_ct.fmap";
inline constexpr const char* kEmbedTl = "embedding_tl.fmap";
inline constexpr const char* kEmbedBr = "embedding_br.fmap";
inline constexpr const char* kOffsetTl = "offset_tl.fmap";
inline constexpr const char* kOffsetBr = "offset_br.fmap";
inline constexpr const char* kOffsetCt = "offset_ct.fmap";
inline constexpr const char* kDepth = "depth.fmap";
inline constexpr const char* kDims = "dims.fmap";
inline constexpr const char* kOrientation = "orientation.fmap";
}  // namespace bundle_files

inline void write_bundle(const std::filesystem::path& dir, const MapBundle& b) {
  using namespace bundle_files;
  fmap::write_file(dir / kHeatTl, b.heat_tl);
  fmap::write_file(dir / kHeatBr, b.heat_br);
  fmap::write_file(dir / kHeatCt, b.heat_ct);
  fmap::write_file(dir / kEmbedTl, b.embed_tl);
  fmap::write_file(dir / kEmbedBr, b.embed_br);
  fmap::write_file(dir / kOffsetTl, b.offset_tl);
  fmap::write_file(dir / kOffsetBr, b.offset_br);
  fmap::write_file(dir / kOffsetCt, b.offset_ct);
  if (b.depth) fmap::write_file(dir / kDepth, *b.depth);
  if (b.dims) fmap::write_file(dir / kDims, *b.dims);
  if (b.orientation) fmap::write_file(dir / kOrientation, *b.orientation);
}

inline MapBundle read_bundle(const std::filesystem::path& dir) {
  using namespace bundle_files;
  auto optional_map = [&](const char* name) -> std::optional<FeatureMap> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    return fmap::read_file(path);
  };
  return MapBundle{fmap::read_file(dir / kHeatTl),   fmap::read_file(dir / kHeatBr),
                   fmap::read_file(dir / kHeatCt),   fmap::read_file(dir / kEmbedTl),
                   fmap::read_file(dir / kEmbedBr),  fmap::read_file(dir / kOffsetTl),
                   fmap::read_file(dir / kOffsetBr), fmap::read_file(dir / kOffsetCt),
                   optional_map(kDepth),             optional_map(kDims),
                   optional_map(kOrientation)};
}

}  // namespace det3d
