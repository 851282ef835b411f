#pragma once

#include <algorithm>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"

namespace cuts3d {

/// Bilinear resize with half-pixel centers and clamped borders (the
/// align_corners=false convention). Output stays within [min(in), max(in)].
template <typename Out, typename In>
Grid<Out> bilinear_resize(const Grid<In>& in, int height, int width) {
  require(height >= 1 && width >= 1, ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  require(!in.empty(), ErrorCode::InvalidArgument, "cannot resize an empty grid");
  Grid<Out> out(height, width);
  const double sy = static_cast<double>(in.height()) / height;
  const double sx = static_cast<double>(in.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(in.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in.height() - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(in.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in.width() - 1);
      const double wx = fx - x0;
      const double top = (1 - wx) * static_cast<double>(in(y0, x0)) + wx * static_cast<double>(in(y0, x1));
      const double bottom = (1 - wx) * static_cast<double>(in(y1, x0)) + wx * static_cast<double>(in(y1, x1));
      out(r, c) = static_cast<Out>((1 - wy) * top + wy * bottom);
    }
  }
  return out;
}

/// Nearest-neighbour resize; used to lift patch masks to pixel masks.
template <typename T>
Grid<T> nearest_resize(const Grid<T>& in, int height, int width) {
  require(height >= 1 && width >= 1 && !in.empty(), ErrorCode::InvalidArgument, "bad nearest resize");
  Grid<T> out(height, width);
  for (int r = 0; r < height; ++r) {
    const int sr = std::min(in.height() - 1, static_cast<int>((static_cast<long long>(r) * in.height()) / height));
    for (int c = 0; c < width; ++c) {
      const int sc = std::min(in.width() - 1, static_cast<int>((static_cast<long long>(c) * in.width()) / width));
      out(r, c) = in(sr, sc);
    }
  }
  return out;
}

}  // namespace cuts3d
