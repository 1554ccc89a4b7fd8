#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colorsal/image.hpp"
#include "colorsal/maskgen.hpp"
#include "colorsal/scorer.hpp"

namespace colorsal {

enum class MapKind { kRise, kDebiased };

struct SaliencyMap {
  ScalarGrid grid;
  std::string label;
  MapKind kind = MapKind::kRise;
  std::size_t n_samples = 0;
  std::optional<ScalarGrid> std_error;  // set when variance tracking is on
};

struct ColorSaliencyStack {
  std::vector<ScalarGrid> channels;  // one per color, palette order
  std::string label;
  std::vector<Rgb> colors;
  std::size_t n_samples = 0;
  std::vector<ScalarGrid> std_error;  // empty unless variance tracking is on
};

struct EstimatorOptions {
  // Threads for mask synthesis and accumulation, and concurrent score
  // requests. Results do not depend on this value.
  int workers = 1;
  // Also accumulate squared per-sample contributions and report the
  // empirical standard error of every pixel.
  bool track_variance = false;
  // Called after each chunk with (samples done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

// S(x) = (1/N) sum_n m_n(x)/p * M(i . m_n, l), one map per label, all labels
// from one shared mask sequence. p is the nominal cfg.p_mask.
std::vector<SaliencyMap> rise_saliency(const ModelScorer& scorer, const Image& image,
                                       std::span<const std::string> labels, const RunConfig& cfg,
                                       const EstimatorOptions& options = {});

// S(x) = (1/N) sum_n (m_n(x) - p) / (p(1-p)) * M(i . m_n, l). Soft mask values
// enter unchanged.
std::vector<SaliencyMap> debiased_saliency(const ModelScorer& scorer, const Image& image,
                                           std::span<const std::string> labels,
                                           const RunConfig& cfg,
                                           const EstimatorOptions& options = {});

// Color saliency stacks. Raw maps sum K m_k(x)/p_mask * M and the baseline sums
// m0(x)/(1-p_mask) * M over the same samples; result = (raw - baseline) / N.
std::vector<ColorSaliencyStack> mcrise_saliency(const ModelScorer& scorer, const Image& image,
                                                std::span<const std::string> labels,
                                                const RunConfig& cfg,
                                                const EstimatorOptions& options = {});

// ---- Response classes ---------------------------------------------------------

enum class ResponseCategory {
  kTextureObstacle,  // every color raises confidence
  kTextureFeature,   // every color lowers confidence
  kIrrelevant,       // no color matters
  kPerColor,         // mixed: see tags
};

enum class ColorTag {
  kMissingColor,  // masking with this color raises confidence
  kColorFeature,  // masking with this color lowers confidence
  kColorMatch,    // masking with this color changes nothing
};

struct PixelResponse {
  ResponseCategory category = ResponseCategory::kIrrelevant;
  std::vector<ColorTag> tags;  // one per color when category == kPerColor
};

struct ResponseClassGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  double epsilon = 0.0;
  std::vector<PixelResponse> pixels;

  const PixelResponse& at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

// 10% of max |S| over the stack; the smallest positive double for an all-zero
// stack.
double default_epsilon(const ColorSaliencyStack& stack);

// Throws ConfigError for epsilon <= 0 and ValidationError for non-finite stacks.
ResponseClassGrid classify_color_response(const ColorSaliencyStack& stack,
                                          std::optional<double> epsilon = std::nullopt);

// "texture_obstacle", "texture_feature", "irrelevant", or tags joined as
// "missing_color:1,color_feature:2,color_match:3" (1-based color indices).
std::string describe(const PixelResponse& response);

}  // namespace colorsal
