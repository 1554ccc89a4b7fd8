#pragma once

#include <string>
#include <vector>

#include "colorsal/image.hpp"
#include "colorsal/scorer.hpp"

// Exact expectations by exhaustive enumeration over low-resolution masks
// (no interpolation, no shift; each cell covers its nearest-neighbor block of
// the image). Masks are enumerated lexicographically over cell states, cell
// (0,0) being the most significant digit.
namespace colorsal::oracle {

struct OracleConfig {
  std::size_t cell_h = 2;
  std::size_t cell_w = 2;
  double p_mask = 0.5;
  std::vector<Rgb> colors;  // color mode only
  int workers = 1;          // concurrent scoring of enumeration batches
  std::size_t batch_size = 256;

  // Throws ConfigError beyond 2^16 binary masks / 2^20 color states.
  void validate_binary() const;
  void validate_color() const;
};

inline constexpr std::size_t kMaxBinaryCells = 16;
inline constexpr std::size_t kMaxColorStates = std::size_t{1} << 20;

// E[M | m(x) = 1] as sum_m M m(x) P[m] / p.  Returns an h x w grid.
ScalarGrid exact_rise(const ModelScorer& scorer, const Image& image, const std::string& label,
                      const OracleConfig& cfg);

// sum_m (m(x) - p) / (p(1-p)) M P[m].
ScalarGrid exact_debiased(const ModelScorer& scorer, const Image& image, const std::string& label,
                          const OracleConfig& cfg);

// E[M | m(x) = 1] - E[M | m(x) = 0], with the conditional mask distributions
// built directly as products over the other cells.
ScalarGrid exact_debiased_conditional(const ModelScorer& scorer, const Image& image,
                                      const std::string& label, const OracleConfig& cfg);

// E[M | cell x masked with color k] - E[M | cell x unmasked], over all
// (K+1)^(h w) cell-state assignments. Returns K grids of h x w.
std::vector<ScalarGrid> exact_mcrise(const ModelScorer& scorer, const Image& image,
                                     const std::string& label, const OracleConfig& cfg);

// sum_m (m_k(x) / (p/K) - m0(x) / (1-p)) M P[m].
std::vector<ScalarGrid> exact_mcrise_weighted(const ModelScorer& scorer, const Image& image,
                                              const std::string& label, const OracleConfig& cfg);

// Mean of a full-resolution grid over each cell's nearest-neighbor block.
ScalarGrid pool_to_cells(const ScalarGrid& full, std::size_t cell_h, std::size_t cell_w);

}  // namespace colorsal::oracle
