#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "colorsal/image.hpp"

namespace colorsal {

// rows = images, columns = labels.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// The black box: confidence M(i, l) in [0,1] for every (image, label) pair.
// Implementations must be safe to call concurrently and stateless with
// respect to call order.
class ModelScorer {
 public:
  virtual ~ModelScorer() = default;

  virtual ScoreMatrix score_batch(std::span<const Image> images,
                                  std::span<const std::string> labels) const = 0;

  // Human-readable identity recorded in run manifests.
  virtual std::string identity() const = 0;
};

// Throws ValidationError unless `m` has the expected shape and every entry is
// a finite value in [0,1]. Scores are never clamped or repaired.
void check_scores(const ScoreMatrix& m, std::size_t images, std::size_t labels,
                  const std::string& source);

// exp(-distance / d0): maps a metric-learning feature distance to a
// confidence in (0,1]. Throws ConfigError for d0 <= 0 or distance < 0.
double reid_confidence(double distance, double d0);

}  // namespace colorsal
