#pragma once

// Corner and center pooling as deterministic max-scans over one channel of a
// feature map. Every operation is O(H*W) per channel.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "det3d/core.hpp"

namespace det3d::pooling {

enum class Axis { Horizontal, Vertical };
enum class Sense { TowardIncreasingIndex, TowardDecreasingIndex };

struct PoolingDirection {
  Axis axis = Axis::Horizontal;
  Sense sense = Sense::TowardIncreasingIndex;
};

enum class Corner { TopLeft, BottomRight };

// out(r, c) = max over the ray that starts at (r, c) and walks in `dir`,
// inclusive of the start cell. Implemented as a running prefix/suffix max.
template <typename T>
BasicFeatureMap<T> directional_max_scan(const BasicFeatureMap<T>& map, std::size_t channel,
                                        PoolingDirection dir) {
  map.check_channel(channel);
  const std::size_t h = map.height();
  const std::size_t w = map.width();
  BasicFeatureMap<T> out(h, w, 1);
  const bool increasing = dir.sense == Sense::TowardIncreasingIndex;

  if (dir.axis == Axis::Horizontal) {
    for (std::size_t r = 0; r < h; ++r) {
      if (increasing) {
        T run = map(r, w - 1, channel);
        for (std::size_t c = w; c-- > 0;) {
          run = std::max(run, map(r, c, channel));
          out(r, c, 0) = run;
        }
      } else {
        T run = map(r, 0, channel);
        for (std::size_t c = 0; c < w; ++c) {
          run = std::max(run, map(r, c, channel));
          out(r, c, 0) = run;
        }
      }
    }
  } else {
    // Column-wise, but iterate rows in the outer loop to stay cache friendly.
    std::vector<T> run(w);
    if (increasing) {
      for (std::size_t c = 0; c < w; ++c) run[c] = map(h - 1, c, channel);
      for (std::size_t r = h; r-- > 0;) {
        for (std::size_t c = 0; c < w; ++c) {
          run[c] = std::max(run[c], map(r, c, channel));
          out(r, c, 0) = run[c];
        }
      }
    } else {
      for (std::size_t c = 0; c < w; ++c) run[c] = map(0, c, channel);
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          run[c] = std::max(run[c], map(r, c, channel));
          out(r, c, 0) = run[c];
        }
      }
    }
  }
  return out;
}

// out(r, c) = max(row r) + max(column c).
template <typename T>
BasicFeatureMap<T> center_pool(const BasicFeatureMap<T>& map, std::size_t channel) {
  map.check_channel(channel);
  const std::size_t h = map.height();
  const std::size_t w = map.width();
  std::vector<T> row_max(h, std::numeric_limits<T>::lowest());
  std::vector<T> col_max(w, std::numeric_limits<T>::lowest());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const T v = map(r, c, channel);
      row_max[r] = std::max(row_max[r], v);
      col_max[c] = std::max(col_max[c], v);
    }
  }
  BasicFeatureMap<T> out(h, w, 1);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) out(r, c, 0) = row_max[r] + col_max[c];
  return out;
}

// Cascade corner pooling: a horizontal scan, then a vertical scan of that
// intermediate, summed with the horizontal result. TopLeft scans toward
// increasing indices, BottomRight toward decreasing ones.
template <typename T>
BasicFeatureMap<T> cascade_corner_pool(const BasicFeatureMap<T>& map, std::size_t channel,
                                       Corner corner) {
  const Sense sense = corner == Corner::TopLeft ? Sense::TowardIncreasingIndex
                                                : Sense::TowardDecreasingIndex;
  BasicFeatureMap<T> out = directional_max_scan(map, channel, {Axis::Horizontal, sense});
  const BasicFeatureMap<T> vertical = directional_max_scan(out, 0, {Axis::Vertical, sense});
  auto dst = out.data();
  auto src = vertical.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

}  // namespace det3d::pooling
