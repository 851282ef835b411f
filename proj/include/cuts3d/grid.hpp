#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cuts3d/error.hpp"

namespace cuts3d {

/// Dense row-major 2-D array for every field on the patch or pixel lattice.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(checked(height)) * static_cast<std::size_t>(checked(width)), fill) {}
  Grid(int height, int width, std::vector<T> data) : height_(height), width_(width), data_(std::move(data)) {
    require(height >= 0 && width >= 0 &&
                data_.size() == static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
            ErrorCode::ShapeMismatch, "grid data does not match its shape");
  }

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  [[nodiscard]] std::span<T> values() noexcept { return data_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  [[nodiscard]] bool same_shape(const auto& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static int checked(int dim) {
    require(dim >= 0, ErrorCode::InvalidArgument, "negative grid dimension");
    return dim;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// Binary mask; nonzero means "inside".
using Mask = Grid<std::uint8_t>;

inline std::size_t count_ones(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

/// Tight (x, y, w, h) box of the nonzero support; all zeros for an empty mask.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline BoundingBox bounding_box(const Mask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m(r, c)) continue;
      x0 = std::min(x0, c);
      y0 = std::min(y0, r);
      x1 = std::max(x1, c);
      y1 = std::max(y1, r);
    }
  }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

inline double mask_iou(const Mask& a, const Mask& b) {
  require(a.same_shape(b), ErrorCode::ShapeMismatch, "IoU of masks with different shapes");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cuts3d
