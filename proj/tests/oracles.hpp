#pragma once

// Brute-force reference implementations used only by tests. Each one walks
// the definition directly (per-cell rays, per-prefix recounts) instead of the
// linear-time or incremental route used by the library.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "det3d/core.hpp"
#include "det3d/metrics.hpp"
#include "det3d/pooling.hpp"

namespace oracle {

using det3d::BasicFeatureMap;
using det3d::Box2D;

// Max along the ray from (r, c) in `dir`, by explicit walking.
template <typename T>
BasicFeatureMap<T> naive_scan(const BasicFeatureMap<T>& m, std::size_t ch,
                              det3d::pooling::PoolingDirection dir) {
  using det3d::pooling::Axis;
  using det3d::pooling::Sense;
  BasicFeatureMap<T> out(m.height(), m.width(), 1);
  const long h = static_cast<long>(m.height());
  const long w = static_cast<long>(m.width());
  const long step = dir.sense == Sense::TowardIncreasingIndex ? 1 : -1;
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      T best = m(r, c, ch);
      long rr = r, cc = c;
      while (true) {
        if (dir.axis == Axis::Horizontal) cc += step; else rr += step;
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) break;
        best = std::max(best, m(rr, cc, ch));
      }
      out(r, c, 0) = best;
    }
  }
  return out;
}

template <typename T>
BasicFeatureMap<T> naive_center_pool(const BasicFeatureMap<T>& m, std::size_t ch) {
  BasicFeatureMap<T> out(m.height(), m.width(), 1);
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      T row_max = std::numeric_limits<T>::lowest();
      T col_max = std::numeric_limits<T>::lowest();
      for (std::size_t k = 0; k < m.width(); ++k) row_max = std::max(row_max, m(r, k, ch));
      for (std::size_t k = 0; k < m.height(); ++k) col_max = std::max(col_max, m(k, c, ch));
      out(r, c, 0) = row_max + col_max;
    }
  }
  return out;
}

// Horizontal ray max, vertical ray max of that, summed; all by walking rays.
template <typename T>
BasicFeatureMap<T> naive_cascade(const BasicFeatureMap<T>& m, std::size_t ch,
                                 det3d::pooling::Corner corner) {
  using det3d::pooling::Axis;
  using det3d::pooling::Sense;
  const Sense s = corner == det3d::pooling::Corner::TopLeft ? Sense::TowardIncreasingIndex
                                                            : Sense::TowardDecreasingIndex;
  const auto h = naive_scan(m, ch, {Axis::Horizontal, s});
  const auto v = naive_scan(h, 0, {Axis::Vertical, s});
  BasicFeatureMap<T> out(m.height(), m.width(), 1);
  for (std::size_t r = 0; r < m.height(); ++r)
    for (std::size_t c = 0; c < m.width(); ++c) out(r, c, 0) = h(r, c, 0) + v(r, c, 0);
  return out;
}

inline double box_iou(const Box2D& a, const Box2D& b) {
  const double ix0 = std::max(a.x_min, b.x_min), iy0 = std::max(a.y_min, b.y_min);
  const double ix1 = std::min(a.x_max, b.x_max), iy1 = std::min(a.y_max, b.y_max);
  const double inter = (ix1 > ix0 && iy1 > iy0) ? (ix1 - ix0) * (iy1 - iy0) : 0.0;
  const double ua = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double ub = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  const double uni = ua + ub - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

// Ranking by repeated selection of the highest score (earliest index on ties).
inline std::vector<std::size_t> rank(const std::vector<Box2D>& dets) {
  std::vector<std::size_t> order;
  std::vector<bool> used(dets.size(), false);
  for (std::size_t k = 0; k < dets.size(); ++k) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (used[i]) continue;
      if (!best || dets[i].score > dets[*best].score) best = i;
    }
    used[*best] = true;
    order.push_back(*best);
  }
  return order;
}

// True positives among the first k ranked detections, rematched from scratch.
inline std::size_t true_positives_in_prefix(const std::vector<Box2D>& dets,
                                            const std::vector<Box2D>& truths,
                                            const std::vector<std::size_t>& order, std::size_t k,
                                            double thr) {
  std::vector<bool> taken(truths.size(), false);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const Box2D& d = dets[order[i]];
    double best = -1.0;
    std::optional<std::size_t> hit;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      const double o = box_iou(d, truths[t]);
      if (o >= thr && o > best) {
        best = o;
        hit = t;
      }
    }
    if (hit) {
      taken[*hit] = true;
      ++tp;
    }
  }
  return tp;
}

// PR curve from per-prefix recounts; integrates the interpolated precision
// (max precision at any recall >= the current one) over recall steps.
inline std::optional<double> average_precision(const std::vector<Box2D>& dets,
                                               const std::vector<Box2D>& truths, double thr,
                                               det3d::metrics::Interpolation interp) {
  if (dets.empty() && truths.empty()) return std::nullopt;
  if (dets.empty() || truths.empty()) return 0.0;
  const auto order = rank(dets);
  const std::size_t n = dets.size();
  std::vector<double> recall(n + 1, 0.0), precision(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t tp = true_positives_in_prefix(dets, truths, order, k, thr);
    recall[k] = static_cast<double>(tp) / static_cast<double>(truths.size());
    precision[k] = static_cast<double>(tp) / static_cast<double>(k);
  }
  if (interp == det3d::metrics::Interpolation::ElevenPoint) {
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = static_cast<double>(t) / 10.0;
      double p = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        if (recall[k] >= level) p = std::max(p, precision[k]);
      ap += p / 11.0;
    }
    return ap;
  }
  double ap = 0.0;
  double prev = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (recall[k] == prev) continue;
    double interp_p = 0.0;
    for (std::size_t j = k; j <= n; ++j) interp_p = std::max(interp_p, precision[j]);
    ap += (recall[k] - prev) * interp_p;
    prev = recall[k];
  }
  return ap;
}

// Angle reduction by repeated +-360 steps.
inline double wrap_by_steps(double deg) {
  while (deg >= 180.0) deg -= 360.0;
  while (deg < -180.0) deg += 360.0;
  return deg;
}

}  // namespace oracle
