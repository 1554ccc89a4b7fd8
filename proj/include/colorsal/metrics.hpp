#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorsal/estimators.hpp"
#include "colorsal/image.hpp"
#include "colorsal/scorer.hpp"

namespace colorsal {

struct DeletionCurve {
  std::vector<double> fractions;    // removed / total pixels, 0 ... 1
  std::vector<double> confidences;  // model confidence after each removal step
  double auc = 0.0;
};

// Fill applied to removed pixels: one color for all, or one per pixel.
struct PixelFill {
  Rgb constant{0.f, 0.f, 0.f};
  std::vector<Rgb> per_pixel;  // row-major; overrides `constant` when non-empty

  static PixelFill black() { return {}; }
};

// Trapezoidal area under confidence vs. fraction. Throws ValidationError for
// fewer than two points or non-increasing fractions.
double auc(const DeletionCurve& curve);

// Removes pixels in `order` in `steps` equal batches (batch j ends after
// floor(j P / steps) pixels), scoring the untouched image first and the fully
// removed image last. Throws ValidationError unless `order` is a permutation
// of all pixels.
DeletionCurve deletion_curve(const ModelScorer& scorer, const Image& image, const std::string& label,
                             std::span<const std::size_t> order, const PixelFill& fill,
                             std::size_t steps = 100, std::size_t batch_size = 32, int workers = 1);

// Pixels by descending saliency; ties by row-major index.
std::vector<std::size_t> order_by_saliency(const ScalarGrid& map);
// Pixels by ascending min_k S(x,k); ties by row-major index.
std::vector<std::size_t> order_by_min_color(const ColorSaliencyStack& stack);
// Color index (0-based) minimizing S(x,k) per pixel; ties to the lowest index.
std::vector<std::size_t> argmin_colors(const ColorSaliencyStack& stack);
// Seeded uniform permutation.
std::vector<std::size_t> random_order(std::size_t pixels, std::uint64_t seed);

// Color-aware deletion: ascending min_k order, each pixel filled with its
// argmin color.
DeletionCurve ca_deletion(const ModelScorer& scorer, const Image& image, const std::string& label,
                          const ColorSaliencyStack& stack, std::size_t steps = 100,
                          std::size_t batch_size = 32, int workers = 1);

std::string curve_to_csv(const DeletionCurve& curve);
nlohmann::json curve_to_json(const DeletionCurve& curve);

}  // namespace colorsal
