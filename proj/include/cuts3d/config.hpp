#pragma once

// Pipeline configuration and its flat key=value text form.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>

#include <json.hpp>

#include "cuts3d/affinity.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/localcut.hpp"
#include "cuts3d/ncut.hpp"
#include "cuts3d/refine.hpp"

namespace cuts3d {

struct PipelineConfig {
  int n_iters = 3;
  double tau_ncut = 0.13;
  double tau_knn = 0.115;
  double tau_knn_min = 0.05;
  int T = 6;
  double beta = 0.45;
  double sc_min = 0.5;
  double sigma_gauss = 2.0;
  int k = 8;
  double z_bg = 2.0;
  bool sharpening = true;
  bool localcut = true;
  bool confidence = true;
  bool crf = true;
  CapacityFn capacity_fn = CapacityFn::Gaussian;
  ExponentCombine exponent_combine = ExponentCombine::Max;
  int worker_count = 1;

  double rest_coverage = 0.95;
  int min_active_nodes = 16;
  double rest_eigenvalue = 0.95;
  int eigen_max_iterations = 10000;
  double eigen_tolerance = 1e-6;

  CrfParams crf_params;
  int image_size = 480;  // expected square input side; 0 accepts any size

  std::string input;   // manifest path
  std::string output;  // output directory

  void validate() const {
    require(n_iters >= 1, ErrorCode::InvalidArgument, "n_iters must be >= 1");
    require(tau_ncut > 0.0 && tau_ncut < 1.0, ErrorCode::InvalidArgument, "tau_ncut must lie in (0, 1)");
    require(tau_knn_min > 0.0 && tau_knn_min < tau_knn, ErrorCode::InvalidArgument, "need 0 < tau_knn_min < tau_knn");
    require(T >= 2, ErrorCode::InvalidArgument, "T must be >= 2");
    require(beta >= 0.0 && beta < 1.0, ErrorCode::InvalidArgument, "beta must lie in [0, 1)");
    require(sc_min >= 0.0 && sc_min <= 1.0, ErrorCode::InvalidArgument, "sc_min must lie in [0, 1]");
    require(sigma_gauss > 0.0, ErrorCode::InvalidArgument, "sigma_gauss must be positive");
    require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
    require(worker_count >= 1, ErrorCode::InvalidArgument, "worker_count must be >= 1");
    require(rest_coverage > 0.0 && rest_coverage <= 1.0, ErrorCode::InvalidArgument, "rest_coverage must lie in (0, 1]");
    require(crf_params.working_side >= 1 && crf_params.working_side <= 120, ErrorCode::InvalidArgument,
            "crf_working_side must lie in [1, 120]");
    require(image_size >= 0, ErrorCode::InvalidArgument, "image_size must be >= 0");
  }

  [[nodiscard]] CutLoopOptions cut_loop_options() const {
    CutLoopOptions o;
    o.iterations = n_iters;
    o.rest_coverage = rest_coverage;
    o.min_active_nodes = min_active_nodes;
    o.rest_eigenvalue = rest_eigenvalue;
    o.eigen.max_iterations = eigen_max_iterations;
    o.eigen.tolerance = eigen_tolerance;
    return o;
  }

  [[nodiscard]] LocalCutOptions local_cut_options() const { return {k, tau_knn, z_bg, capacity_fn}; }

  template <typename Visitor>
  void visit(Visitor&& v) {
    v("n_iters", n_iters);
    v("tau_ncut", tau_ncut);
    v("tau_knn", tau_knn);
    v("tau_knn_min", tau_knn_min);
    v("T", T);
    v("beta", beta);
    v("sc_min", sc_min);
    v("sigma_gauss", sigma_gauss);
    v("k", k);
    v("z_bg", z_bg);
    v("sharpening", sharpening);
    v("localcut", localcut);
    v("confidence", confidence);
    v("crf", crf);
    v("capacity_fn", capacity_fn);
    v("exponent_combine", exponent_combine);
    v("worker_count", worker_count);
    v("rest_coverage", rest_coverage);
    v("min_active_nodes", min_active_nodes);
    v("rest_eigenvalue", rest_eigenvalue);
    v("eigen_max_iterations", eigen_max_iterations);
    v("eigen_tolerance", eigen_tolerance);
    v("crf_iterations", crf_params.iterations);
    v("crf_spatial_sigma", crf_params.spatial_sigma);
    v("crf_spatial_weight", crf_params.spatial_weight);
    v("crf_bilateral_sigma_xy", crf_params.bilateral_sigma_xy);
    v("crf_bilateral_sigma_rgb", crf_params.bilateral_sigma_rgb);
    v("crf_bilateral_weight", crf_params.bilateral_weight);
    v("crf_working_side", crf_params.working_side);
    v("crf_probability_clamp", crf_params.probability_clamp);
    v("image_size", image_size);
    v("input", input);
    v("output", output);
  }
  template <typename Visitor>
  void visit(Visitor&& v) const {
    const_cast<PipelineConfig*>(this)->visit([&](std::string_view key, auto& value) { v(key, std::as_const(value)); });
  }
};

namespace detail {

inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "on" : "off"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(CapacityFn v) { return std::string(to_string(v)); }
inline std::string format_value(ExponentCombine v) { return std::string(to_string(v)); }
inline std::string format_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, end);
}

inline void parse_value(std::string_view key, std::string_view text, int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::InvalidArgument,
          "bad integer for " + std::string(key) + ": '" + std::string(text) + "'");
}
inline void parse_value(std::string_view key, std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::InvalidArgument,
          "bad number for " + std::string(key) + ": '" + std::string(text) + "'");
}
inline void parse_value(std::string_view key, std::string_view text, bool& out) {
  if (text == "on" || text == "true" || text == "1") out = true;
  else if (text == "off" || text == "false" || text == "0") out = false;
  else throw Error(ErrorCode::InvalidArgument, "bad switch for " + std::string(key) + ": '" + std::string(text) + "'");
}
inline void parse_value(std::string_view, std::string_view text, std::string& out) { out = std::string(text); }
inline void parse_value(std::string_view, std::string_view text, CapacityFn& out) { out = parse_capacity_fn(text); }
inline void parse_value(std::string_view, std::string_view text, ExponentCombine& out) {
  out = parse_exponent_combine(text);
}

}  // namespace detail

inline std::string to_text(const PipelineConfig& cfg) {
  std::string s;
  cfg.visit([&](std::string_view key, const auto& value) {
    s += key;
    s += '=';
    s += detail::format_value(value);
    s += '\n';
  });
  return s;
}

/// Applies `key=value` lines on top of `base`. Blank lines and '#' comments are skipped.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = tensorio::detail::trim(line);
    if (v.empty() || v.front() == '#') continue;
    const auto eq = v.find('=');
    require(eq != std::string_view::npos, ErrorCode::InvalidArgument,
            "config line " + std::to_string(lineno) + " is not key=value");
    const auto key = tensorio::detail::trim(v.substr(0, eq));
    const auto value = tensorio::detail::trim(v.substr(eq + 1));
    bool found = false;
    base.visit([&](std::string_view k, auto& field) {
      if (k != key) return;
      detail::parse_value(k, value, field);
      found = true;
    });
    require(found, ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
  return base;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  return parse_config(tensorio::read_file(path), std::move(base));
}

inline nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  cfg.visit([&](std::string_view key, const auto& value) {
    using T = std::decay_t<decltype(value)>;
    if constexpr (std::is_same_v<T, CapacityFn> || std::is_same_v<T, ExponentCombine>)
      j[std::string(key)] = std::string(to_string(value));
    else
      j[std::string(key)] = value;
  });
  return j;
}

}  // namespace cuts3d
