#pragma once

// NPY v1.0 float32 container (little-endian, C order).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"

namespace cuts3d::tensorio {

static_assert(std::endian::native == std::endian::little, "tensor files are little-endian");

struct TensorFile {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  [[nodiscard]] std::size_t element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  friend bool operator==(const TensorFile& a, const TensorFile& b) {
    // bitwise, so NaN payloads and signed zeros compare exactly
    return a.shape == b.shape && a.data.size() == b.data.size() &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
  }
};

namespace detail {

inline constexpr std::string_view kMagic{"\x93NUMPY", 6};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Value text for `key` in the python-literal header dict, up to the next
// top-level comma or closing brace.
inline std::string_view dict_value(std::string_view header, std::string_view key) {
  const std::string quoted_single = "'" + std::string(key) + "'";
  const std::string quoted_double = "\"" + std::string(key) + "\"";
  auto pos = header.find(quoted_single);
  std::size_t key_len = quoted_single.size();
  if (pos == std::string_view::npos) {
    pos = header.find(quoted_double);
    key_len = quoted_double.size();
  }
  require(pos != std::string_view::npos, ErrorCode::MalformedHeader, "missing key '" + std::string(key) + "'");
  auto colon = header.find(':', pos + key_len);
  require(colon != std::string_view::npos, ErrorCode::MalformedHeader, "missing ':' after key");
  std::size_t i = colon + 1;
  int depth = 0;
  std::size_t start = i;
  for (; i < header.size(); ++i) {
    const char ch = header[i];
    if (ch == '(' || ch == '[') ++depth;
    if (ch == ')' || ch == ']') --depth;
    if (depth == 0 && (ch == ',' || ch == '}')) break;
  }
  require(depth == 0 && i < header.size(), ErrorCode::MalformedHeader, "unterminated header value");
  return trim(header.substr(start, i - start));
}

inline std::vector<std::size_t> parse_shape(std::string_view text) {
  require(text.size() >= 2 && text.front() == '(' && text.back() == ')', ErrorCode::MalformedHeader,
          "shape is not a tuple");
  text = text.substr(1, text.size() - 2);
  std::vector<std::size_t> shape;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = trim(text.substr(0, comma));
    if (!item.empty()) {
      std::size_t value = 0;
      for (char ch : item) {
        require(ch >= '0' && ch <= '9', ErrorCode::MalformedHeader, "non-numeric shape entry");
        value = value * 10 + static_cast<std::size_t>(ch - '0');
      }
      shape.push_back(value);
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return shape;
}

inline std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

}  // namespace detail

/// Parses an in-memory NPY image. Split out from read_tensor so that malformed
/// payloads can be exercised without touching the filesystem.
inline TensorFile parse_npy(std::string_view bytes) {
  require(bytes.size() >= 10 && bytes.substr(0, 6) == detail::kMagic, ErrorCode::MalformedHeader,
          "missing NPY magic");
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  require(major == 1 && minor == 0, ErrorCode::MalformedHeader,
          "unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  const std::size_t header_len =
      static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  require(bytes.size() >= 10 + header_len, ErrorCode::MalformedHeader, "header length exceeds file size");
  const std::string_view header = bytes.substr(10, header_len);
  require(header.find('{') != std::string_view::npos, ErrorCode::MalformedHeader, "header is not a dict");

  auto descr = detail::dict_value(header, "descr");
  require(descr.size() >= 2, ErrorCode::MalformedHeader, "bad descr");
  descr = descr.substr(1, descr.size() - 2);
  require(descr == "<f4" || descr == "f4" || descr == "=f4", ErrorCode::UnsupportedDtype,
          "dtype " + std::string(descr) + " (expected little-endian float32)");
  require(detail::dict_value(header, "fortran_order") == "False", ErrorCode::UnsupportedDtype,
          "Fortran-ordered payloads are not supported");

  TensorFile t;
  t.shape = detail::parse_shape(detail::dict_value(header, "shape"));
  const std::size_t count = t.element_count();
  const std::string_view payload = bytes.substr(10 + header_len);
  require(payload.size() >= count * sizeof(float), ErrorCode::TruncatedPayload,
          "expected " + std::to_string(count * sizeof(float)) + " payload bytes, found " +
              std::to_string(payload.size()));
  t.data.resize(count);
  if (count) std::memcpy(t.data.data(), payload.data(), count * sizeof(float));
  return t;
}

inline std::string serialize_npy(const TensorFile& t) {
  require(t.element_count() == t.data.size(), ErrorCode::ShapeMismatch, "shape does not match element count");
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + detail::shape_literal(t.shape) + ", }";
  // magic(6) + version(2) + length(2) + header + '\n' padded to a multiple of 64
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out(detail::kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  out += header;
  out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoFailure, "short write to " + path.string());
}

inline TensorFile read_tensor(const std::filesystem::path& path) { return parse_npy(read_file(path)); }

inline void write_tensor(const TensorFile& t, const std::filesystem::path& path) {
  write_file(path, serialize_npy(t));
}

inline TensorFile from_grid(const Grid<float>& g) {
  return {{static_cast<std::size_t>(g.height()), static_cast<std::size_t>(g.width())}, g.storage()};
}

inline Grid<float> to_grid(const TensorFile& t) {
  require(t.shape.size() == 2, ErrorCode::ShapeMismatch, "expected a rank-2 tensor");
  return Grid<float>(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), t.data);
}

}  // namespace cuts3d::tensorio
