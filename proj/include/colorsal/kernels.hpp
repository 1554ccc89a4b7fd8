#pragma once

#include <cstddef>
#include <span>

#include "colorsal/scorer.hpp"

// an OpenMP version. The OpenMP versions split the pixels into tiles across
// threads and keep the per-pixel summation order over samples, so both
// produce bit-identical accumulators.
namespace colorsal::kernels {

// Binary-mask estimators: weight(m) = (m - offset) * scale.
//   RISE:     offset 0, scale 1/p
//   debiased: offset p, scale 1/(p(1-p))
struct BinaryWeight {
  double offset = 0.0;
  double scale = 1.0;
};

// masks[n] points at `pixels` mask values of sample n; scores is
// (#samples x #labels). acc and (optional, may be empty) sumsq hold
// #labels * pixels values, label-major.
void accumulate_binary_serial(std::span<const double* const> masks, std::size_t pixels,
                              const ScoreMatrix& scores, BinaryWeight weight,
                              std::span<double> acc, std::span<double> sumsq);
void accumulate_binary_omp(std::span<const double* const> masks, std::size_t pixels,
                           const ScoreMatrix& scores, BinaryWeight weight, std::span<double> acc,
                           std::span<double> sumsq, int threads);

// Color-mask estimator, per sample n, label l, color k, pixel x:
//   raw[l][k][x]  += (K * m_k(x) / p_mask) * s
//   base[l][x]    += (m0(x) / (1 - p_mask)) * s
// channels[n][k] / nonmasked[n] point at `pixels` values. sumsq (optional)
// accumulates the squared per-sample difference of the two terms, laid out
// like raw.
struct ColorBatch {
  std::span<const double* const> channels;  // #samples * K pointers, sample-major
  std::span<const double* const> nonmasked;  // #samples pointers
  std::size_t num_colors = 0;
  std::size_t pixels = 0;
};

void accumulate_color_serial(const ColorBatch& batch, const ScoreMatrix& scores, double p_mask,
                             std::span<double> raw, std::span<double> base, std::span<double> sumsq);
void accumulate_color_omp(const ColorBatch& batch, const ScoreMatrix& scores, double p_mask,
                          std::span<double> raw, std::span<double> base, std::span<double> sumsq,
                          int threads);

}  // namespace colorsal::kernels
