#pragma once

#include <optional>
#include <span>

#include "colorsal/image.hpp"

namespace colorsal {

enum class HeatmapMode { kSigned, kUnsigned };

// Sequential ramp sample for t in [0,1].
Rgb sequential_ramp(double t);
// Diverging ramp sample for t in [0,1]; t = 0.5 is exactly the mid color.
Rgb diverging_ramp(double t);
Rgb diverging_mid_color();

struct HeatmapRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Unsigned: [min,max] -> sequential ramp (flat maps render the ramp midpoint).
// Signed: [-A,+A] with A = max|value| -> diverging ramp, 0 at the mid color.
// `range` overrides the data-derived range (signed mode uses max(|lo|,|hi|)),
// which lets a color stack share one scale across channels.
// Throws ValidationError on NaN/Inf.
Image render_heatmap(const ScalarGrid& map, HeatmapMode mode,
                     std::optional<HeatmapRange> range = std::nullopt);

// Per-pixel alpha blend: alpha * heatmap + (1 - alpha) * image.
Image overlay(const ScalarGrid& map, const Image& image, double alpha,
              HeatmapMode mode = HeatmapMode::kSigned,
              std::optional<HeatmapRange> range = std::nullopt);

// One panel per channel laid out left to right, each topped by a swatch of the
// channel's masking color; all panels share one signed scale.
Image compose_color_panel(std::span<const ScalarGrid> channels, std::span<const Rgb> colors,
                          std::size_t swatch_height = 8, std::size_t gap = 2);

// Data range of a set of grids (min over all, max over all).
HeatmapRange joint_range(std::span<const ScalarGrid> grids);

}  // namespace colorsal
