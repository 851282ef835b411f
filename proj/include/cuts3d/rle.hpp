#pragma once

// COCO-compatible uncompressed RLE: column-major runs, first run counts zeros.

#include <cstdint>
#include <limits>
#include <vector>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"

namespace cuts3d::rle {

struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

inline RleMask encode(const Mask& mask) {
  const std::uint64_t total = static_cast<std::uint64_t>(mask.height()) * static_cast<std::uint64_t>(mask.width());
  require(total <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::CountsOverflow,
          "mask has more pixels than a 32-bit run can hold");
  RleMask r{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int row = 0; row < mask.height(); ++row) {
      const std::uint8_t v = mask(row, c) ? 1 : 0;
      if (v != current) {
        r.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  r.counts.push_back(run);
  return r;
}

inline Mask decode(const RleMask& r) {
  require(r.height >= 0 && r.width >= 0, ErrorCode::ShapeMismatch, "negative RLE size");
  std::uint64_t sum = 0;
  for (auto c : r.counts) sum += c;
  const std::uint64_t total = static_cast<std::uint64_t>(r.height) * static_cast<std::uint64_t>(r.width);
  require(sum == total, ErrorCode::CountsOverflow,
          "RLE counts sum to " + std::to_string(sum) + " but the mask has " + std::to_string(total) + " pixels");
  Mask m(r.height, r.width, 0);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (auto c : r.counts) {
    for (std::uint32_t k = 0; k < c; ++k, ++pos) {
      const auto col = static_cast<int>(pos / static_cast<std::uint64_t>(r.height));
      const auto row = static_cast<int>(pos % static_cast<std::uint64_t>(r.height));
      m(row, col) = value;
    }
    value ^= 1;
  }
  return m;
}

/// Number of foreground pixels without decoding (sum of odd-position counts).
inline std::uint64_t area(const RleMask& r) {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < r.counts.size(); i += 2) a += r.counts[i];
  return a;
}

}  // namespace cuts3d::rle
