#include "colorsal/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "colorsal/error.hpp"

namespace colorsal {
namespace {

// Anchors are evenly spaced over [0,1].
template <std::size_t N>
Rgb sample_ramp(const std::array<Rgb, N>& anchors, double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * static_cast<double>(N - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), N - 2);
  const double f = pos - static_cast<double>(i);
  if (f == 0.0) return anchors[i];
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<float>((1.0 - f) * anchors[i][c] + f * anchors[i + 1][c]);
  }
  return out;
}

// Inferno-like sequential ramp.
constexpr std::array<Rgb, 6> kSequential = {{
    {0.001f, 0.000f, 0.014f},
    {0.258f, 0.039f, 0.406f},
    {0.578f, 0.148f, 0.404f},
    {0.865f, 0.317f, 0.226f},
    {0.988f, 0.645f, 0.040f},
    {0.988f, 0.998f, 0.645f},
}};

// Blue - white - red diverging ramp; the middle anchor is the zero color.
constexpr std::array<Rgb, 5> kDiverging = {{
    {0.020f, 0.188f, 0.380f},
    {0.400f, 0.655f, 0.812f},
    {1.000f, 1.000f, 1.000f},
    {0.839f, 0.376f, 0.302f},
    {0.404f, 0.000f, 0.051f},
}};

void check_finite(const ScalarGrid& map) {
  for (double v : map.data()) {
    if (!std::isfinite(v)) throw ValidationError("render_heatmap: map contains NaN or Inf");
  }
}

}  // namespace

Rgb sequential_ramp(double t) { return sample_ramp(kSequential, t); }
Rgb diverging_ramp(double t) { return sample_ramp(kDiverging, t); }
Rgb diverging_mid_color() { return kDiverging[2]; }

HeatmapRange joint_range(std::span<const ScalarGrid> grids) {
  HeatmapRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& g : grids) {
    for (double v : g.data()) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  if (r.lo > r.hi) r = {0.0, 0.0};
  return r;
}

Image render_heatmap(const ScalarGrid& map, HeatmapMode mode, std::optional<HeatmapRange> range) {
  check_finite(map);
  const HeatmapRange r = range ? *range : joint_range(std::span(&map, 1));
  Image out(map.height(), map.width());
  if (mode == HeatmapMode::kSigned) {
    const double amp = std::max(std::abs(r.lo), std::abs(r.hi));
    for (std::size_t y = 0; y < map.height(); ++y) {
      for (std::size_t x = 0; x < map.width(); ++x) {
        const double t = amp > 0.0 ? 0.5 + 0.5 * map(y, x) / amp : 0.5;
        out.set(y, x, diverging_ramp(t));
      }
    }
  } else {
    const double span = r.hi - r.lo;
    for (std::size_t y = 0; y < map.height(); ++y) {
      for (std::size_t x = 0; x < map.width(); ++x) {
        const double t = span > 0.0 ? (map(y, x) - r.lo) / span : 0.5;
        out.set(y, x, sequential_ramp(t));
      }
    }
  }
  return out;
}

Image overlay(const ScalarGrid& map, const Image& image, double alpha, HeatmapMode mode,
              std::optional<HeatmapRange> range) {
  if (map.height() != image.height() || map.width() != image.width()) {
    throw ValidationError("overlay: heatmap and image dimensions differ");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("overlay: alpha must be in [0,1]");
  const Image heat = render_heatmap(map, mode, range);
  if (alpha == 0.0) return image;
  if (alpha == 1.0) return heat;
  Image out(image.height(), image.width());
  auto dst = out.data();
  auto h = heat.data();
  auto src = image.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(alpha * h[i] + (1.0 - alpha) * src[i]);
  }
  return out;
}

Image compose_color_panel(std::span<const ScalarGrid> channels, std::span<const Rgb> colors,
                          std::size_t swatch_height, std::size_t gap) {
  if (channels.empty() || channels.size() != colors.size()) {
    throw ValidationError("compose_color_panel: need one color per channel");
  }
  const std::size_t h = channels.front().height();
  const std::size_t w = channels.front().width();
  const HeatmapRange range = joint_range(channels);
  const std::size_t k = channels.size();
  Image panel(swatch_height + gap + h, k * w + (k - 1) * gap, {1.f, 1.f, 1.f});
  for (std::size_t c = 0; c < k; ++c) {
    if (channels[c].height() != h || channels[c].width() != w) {
      throw ValidationError("compose_color_panel: ragged stack");
    }
    const std::size_t x0 = c * (w + gap);
    for (std::size_t y = 0; y < swatch_height; ++y) {
      for (std::size_t x = 0; x < w; ++x) panel.set(y, x0 + x, colors[c]);
    }
    const Image heat = render_heatmap(channels[c], HeatmapMode::kSigned, range);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) panel.set(swatch_height + gap + y, x0 + x, heat.at(y, x));
    }
  }
  return panel;
}

}  // namespace colorsal
