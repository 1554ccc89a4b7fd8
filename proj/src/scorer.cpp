#include "colorsal/scorer.hpp"

#include <cmath>

#include "colorsal/error.hpp"

namespace colorsal {

void check_scores(const ScoreMatrix& m, std::size_t images, std::size_t labels,
                  const std::string& source) {
  if (m.rows != images || m.cols != labels || m.values.size() != images * labels) {
    throw ValidationError(source + ": expected a " + std::to_string(images) + "x" +
                          std::to_string(labels) + " score matrix, got " + std::to_string(m.rows) +
                          "x" + std::to_string(m.cols));
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double v = m.values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError(source + ": score " + std::to_string(v) + " at row " +
                            std::to_string(i / labels) + " is outside [0,1]");
    }
  }
}

double reid_confidence(double distance, double d0) {
  if (!(d0 > 0.0) || !std::isfinite(d0)) throw ConfigError("reid_confidence: d0 must be positive");
  if (!(distance >= 0.0)) throw ConfigError("reid_confidence: distance must be non-negative");
  return std::exp(-distance / d0);
}

}  // namespace colorsal
