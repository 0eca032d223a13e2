#pragma once

// Anchor-free 2D decode: heatmap peaks -> tag-grouped corner pairs ->
// center-validated boxes refined by sub-cell offsets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "det3d/core.hpp"

namespace det3d::decode {

struct PeakExtractionConfig {
  double score_threshold = 0.3;
  std::size_t nms_window = 3;  // odd
  std::size_t top_k = 100;     // per channel

  void validate() const {
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
      throw ConfigError("score_threshold must lie in [0, 1]");
    }
    if (nms_window == 0 || nms_window % 2 == 0) {
      throw ConfigError("nms_window must be an odd integer >= 1");
    }
    if (top_k == 0) throw ConfigError("top_k must be >= 1");
  }
};

struct GroupingConfig {
  double theta = 0.5;  // corners pair when |tag_a - tag_b| < theta
  bool geometric_gate = true;

  void validate() const {
    if (!(std::isfinite(theta) && theta > 0.0)) {
      throw ConfigError("theta must be finite and positive");
    }
  }
};

struct OffsetVector {
  double o_x = 0.0;
  double o_y = 0.0;
};

// Sub-cell offset maps (2 channels: o_x, o_y), one per keypoint kind.
template <typename T>
struct OffsetMaps {
  const BasicFeatureMap<T>& top_left;
  const BasicFeatureMap<T>& bottom_right;
  const BasicFeatureMap<T>& center;
};

struct DecodedBox {
  Box2D box;
  Keypoint top_left;
  Keypoint bottom_right;
  Keypoint center;
  std::pair<double, double> center_px;  // refined center keypoint, image pixels
};

namespace detail {

// Lexicographic order used for every tie: score descending, then row, col, class.
inline bool keypoint_before(const Keypoint& a, const Keypoint& b) noexcept {
  return std::tie(b.score, a.row, a.col, a.class_id) < std::tie(a.score, b.row, b.col, b.class_id);
}

template <typename T>
bool is_strict_local_max(const BasicFeatureMap<T>& map, std::size_t r, std::size_t c,
                         std::size_t ch, std::size_t half) {
  const T v = map(r, c, ch);
  const std::size_t r0 = r >= half ? r - half : 0;
  const std::size_t c0 = c >= half ? c - half : 0;
  const std::size_t r1 = std::min(map.height() - 1, r + half);
  const std::size_t c1 = std::min(map.width() - 1, c + half);
  for (std::size_t rr = r0; rr <= r1; ++rr) {
    for (std::size_t cc = c0; cc <= c1; ++cc) {
      if (rr == r && cc == c) continue;
      const T n = map(rr, cc, ch);
      if (n > v) return false;
      // Equal neighbours: the lexicographically smallest cell wins.
      if (n == v && std::pair(rr, cc) < std::pair(r, c)) return false;
    }
  }
  return true;
}

}  // namespace detail

// Local maxima of every channel that clear the score threshold, at most top_k
// per channel, sorted by descending score (ties: row, col, class).
template <typename T>
std::vector<Keypoint> extract_peaks(const BasicFeatureMap<T>& heatmap,
                                    const PeakExtractionConfig& cfg, KeypointKind kind) {
  cfg.validate();
  const std::size_t half = cfg.nms_window / 2;
  std::vector<Keypoint> all;
  for (std::size_t ch = 0; ch < heatmap.channels(); ++ch) {
    std::vector<Keypoint> peaks;
    for (std::size_t r = 0; r < heatmap.height(); ++r) {
      for (std::size_t c = 0; c < heatmap.width(); ++c) {
        const double v = static_cast<double>(heatmap(r, c, ch));
        if (!(v >= cfg.score_threshold)) continue;
        if (!detail::is_strict_local_max(heatmap, r, c, ch, half)) continue;
        peaks.push_back({kind, ch, r, c, v, 0.0});
      }
    }
    std::sort(peaks.begin(), peaks.end(), detail::keypoint_before);
    if (peaks.size() > cfg.top_k) peaks.resize(cfg.top_k);
    all.insert(all.end(), peaks.begin(), peaks.end());
  }
  std::sort(all.begin(), all.end(), detail::keypoint_before);
  return all;
}

// Reads each keypoint's associative-embedding tag from a 1-channel map.
template <typename T>
void attach_tags(std::vector<Keypoint>& keypoints, const BasicFeatureMap<T>& embedding) {
  if (embedding.channels() != 1) {
    throw ConfigError("embedding map must have exactly 1 channel, got " +
                      std::to_string(embedding.channels()));
  }
  for (auto& kp : keypoints) kp.tag = static_cast<double>(embedding.at(kp.row, kp.col, 0));
}

// Greedy best-first corner matching by ascending tag distance. Only same-class
// pairs with |dt| < theta are candidates; each keypoint is used at most once.
inline std::vector<std::pair<Keypoint, Keypoint>> group_corners(
    const std::vector<Keypoint>& top_lefts, const std::vector<Keypoint>& bottom_rights,
    const GroupingConfig& cfg) {
  cfg.validate();
  struct Candidate {
    double distance;
    std::size_t tl;
    std::size_t br;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < top_lefts.size(); ++i) {
    const Keypoint& a = top_lefts[i];
    for (std::size_t j = 0; j < bottom_rights.size(); ++j) {
      const Keypoint& b = bottom_rights[j];
      if (a.class_id != b.class_id) continue;
      if (cfg.geometric_gate && (a.row > b.row || a.col > b.col)) continue;
      const double d = std::abs(a.tag - b.tag);
      if (!(d < cfg.theta)) continue;
      candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.distance, x.tl, x.br) < std::tie(y.distance, y.tl, y.br);
  });

  std::vector<bool> tl_used(top_lefts.size(), false);
  std::vector<bool> br_used(bottom_rights.size(), false);
  std::vector<std::pair<Keypoint, Keypoint>> pairs;
  for (const Candidate& cand : candidates) {
    if (tl_used[cand.tl] || br_used[cand.br]) continue;
    tl_used[cand.tl] = br_used[cand.br] = true;
    pairs.emplace_back(top_lefts[cand.tl], bottom_rights[cand.br]);
  }
  return pairs;
}

template <typename T>
OffsetVector offset_at(const Keypoint& kp, const BasicFeatureMap<T>& offsets) {
  if (offsets.channels() != 2) {
    throw ConfigError("offset map must have exactly 2 channels (o_x, o_y), got " +
                      std::to_string(offsets.channels()));
  }
  return {static_cast<double>(offsets.at(kp.row, kp.col, 0)),
          static_cast<double>(offsets.at(kp.row, kp.col, 1))};
}

// Image-pixel position of a keypoint: (cell + offset) * stride. Returns (x, y).
template <typename T>
std::pair<double, double> refine_with_offsets(const Keypoint& kp,
                                              const BasicFeatureMap<T>& offsets,
                                              std::size_t stride) {
  if (stride == 0) throw ConfigError("stride must be positive");
  const OffsetVector o = offset_at(kp, offsets);
  const double s = static_cast<double>(stride);
  return {(static_cast<double>(kp.col) + o.o_x) * s, (static_cast<double>(kp.row) + o.o_y) * s};
}

// True when (x, y) lies in the middle third of the box in both dimensions.
inline bool in_central_region(const Box2D& box, double x, double y) noexcept {
  const double w3 = box.width() / 3.0;
  const double h3 = box.height() / 3.0;
  return x >= box.x_min + w3 && x <= box.x_max - w3 && y >= box.y_min + h3 &&
         y <= box.y_max - h3;
}

// Builds a box per corner pair and keeps it only when a same-class center
// keypoint falls in its central region. When several centers qualify the
// highest-scoring one (earliest in `centers` on ties) is attached.
template <typename T>
std::vector<DecodedBox> assemble_boxes(const std::vector<std::pair<Keypoint, Keypoint>>& pairs,
                                       const std::vector<Keypoint>& centers,
                                       const OffsetMaps<T>& offsets, std::size_t stride) {
  std::vector<std::pair<double, double>> center_px;
  center_px.reserve(centers.size());
  for (const auto& kp : centers) center_px.push_back(refine_with_offsets(kp, offsets.center, stride));

  std::vector<DecodedBox> boxes;
  for (const auto& [tl, br] : pairs) {
    const auto [x0, y0] = refine_with_offsets(tl, offsets.top_left, stride);
    const auto [x1, y1] = refine_with_offsets(br, offsets.bottom_right, stride);
    const Box2D hull(std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1),
                     tl.class_id, 0.0);

    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (centers[k].class_id != tl.class_id) continue;
      if (!in_central_region(hull, center_px[k].first, center_px[k].second)) continue;
      if (!best || centers[k].score > centers[*best].score) best = k;
    }
    if (!best) continue;

    const Keypoint& ct = centers[*best];
    const double score = std::clamp((tl.score + br.score + ct.score) / 3.0, 0.0, 1.0);
    boxes.push_back({Box2D(hull.x_min, hull.y_min, hull.x_max, hull.y_max, tl.class_id, score),
                     tl, br, ct, center_px[*best]});
  }
  return boxes;
}

}  // namespace det3d::decode
