#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorsal/scorer.hpp"

namespace colorsal {

// Half-open pixel rectangle [row0,row1) x [col0,col1).
struct Rect {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t row1 = 0;
  std::size_t col1 = 0;

  bool contains(std::size_t y, std::size_t x) const {
    return y >= row0 && y < row1 && x >= col0 && x < col1;
  }
  std::size_t area() const { return (row1 - row0) * (col1 - col0); }
};

// Closed-form scorers used as oracles and for demos. Every kind returns the
// same value for all labels; `labels`, when non-empty, lists the labels the
// scorer accepts.
//
//   constant      c
//   pixel_linear  bias + sum_{pixel, channel} w * i
//   region_color  mean over `region` of exp(-|i - target|^2 / (2 bandwidth^2))
//   ignore_pixel  base scorer evaluated with `ignored` pixels forced to black
//   weighted_sum  sum_j coefficient_j * child_j
//
// Results are clamped to [0,1].
struct SyntheticScorerSpec {
  enum class Kind { kConstant, kPixelLinear, kRegionColor, kIgnorePixel, kWeightedSum };

  Kind kind = Kind::kConstant;
  double value = 0.0;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> weights;  // height * width * 3, interleaved like Image
  double bias = 0.0;

  Rect region;
  Rgb target{1.f, 0.f, 0.f};
  double bandwidth = 0.25;

  std::vector<Rect> ignored;
  std::vector<SyntheticScorerSpec> children;
  std::vector<double> coefficients;

  std::vector<std::string> labels;

  static SyntheticScorerSpec constant(double c);
  static SyntheticScorerSpec pixel_linear(std::size_t height, std::size_t width,
                                          std::vector<double> weights, double bias = 0.0);
  // Weights 1 / (3 H W): a white image scores exactly 1.
  static SyntheticScorerSpec uniform_pixel_linear(std::size_t height, std::size_t width);
  static SyntheticScorerSpec region_color(Rect region, Rgb target, double bandwidth);
  static SyntheticScorerSpec ignore_pixel(SyntheticScorerSpec base, std::vector<Rect> ignored);
  static SyntheticScorerSpec weighted_sum(std::vector<SyntheticScorerSpec> children,
                                          std::vector<double> coefficients);

  // Throws ConfigError describing the first invalid parameter.
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticScorerSpec from_json(const nlohmann::json& j);
};

std::unique_ptr<ModelScorer> make_synthetic_scorer(SyntheticScorerSpec spec);

// CLI form of a synthetic spec: inline JSON ("{...}"), "@path" to a JSON file,
// or the shorthand "constant:<c>".
SyntheticScorerSpec parse_synthetic_spec(const std::string& text);

std::string kind_name(SyntheticScorerSpec::Kind kind);

}  // namespace colorsal
