#pragma once

// 8-bit RGB images and PNG I/O (libpng).

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"

namespace cuts3d {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const std::uint8_t* at(int row, int col) const {
    return &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Float RGB in [0, 1]; the working type for compositing.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.0f) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  float* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const float* at(int row, int col) const { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
};

inline FloatImage to_float(const RgbImage& img) {
  FloatImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  return out;
}

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

inline RgbImage read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  require(fp != nullptr, ErrorCode::IoFailure, "cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  require(std::fread(sig.data(), 1, sig.size(), fp.get()) == sig.size() && png_sig_cmp(sig.data(), 0, 8) == 0,
          ErrorCode::MalformedHeader, path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::IoFailure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::IoFailure, "png_create_info_struct failed");
  }
  RgbImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::TruncatedPayload, "libpng failed to decode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  // Normalize everything to 8-bit RGB.
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  rows.resize(static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) rows[r] = img.at(r, 0);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const RgbImage& img, const std::filesystem::path& path) {
  require(img.pixels.size() == static_cast<std::size_t>(img.width) * img.height * 3, ErrorCode::ShapeMismatch,
          "pixel buffer does not match image size");
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  require(fp != nullptr, ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCode::IoFailure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoFailure, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) rows[r] = const_cast<png_bytep>(img.at(r, 0));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace cuts3d
