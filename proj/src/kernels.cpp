#include "colorsal/kernels.hpp"

#include <algorithm>

#include "colorsal/error.hpp"

namespace colorsal::kernels {
namespace {

void check_binary(std::span<const double* const> masks, std::size_t pixels, const ScoreMatrix& scores,
                  std::span<double> acc, std::span<double> sumsq) {
  if (scores.rows != masks.size()) throw ValidationError("accumulate: one score row per mask required");
  if (acc.size() != scores.cols * pixels) throw ValidationError("accumulate: accumulator size mismatch");
  if (!sumsq.empty() && sumsq.size() != acc.size()) {
    throw ValidationError("accumulate: variance accumulator size mismatch");
  }
}

void check_color(const ColorBatch& b, const ScoreMatrix& scores, std::span<double> raw,
                 std::span<double> base, std::span<double> sumsq) {
  const std::size_t n = b.nonmasked.size();
  if (scores.rows != n || b.channels.size() != n * b.num_colors) {
    throw ValidationError("accumulate: mask and score counts disagree");
  }
  if (raw.size() != scores.cols * b.num_colors * b.pixels || base.size() != scores.cols * b.pixels) {
    throw ValidationError("accumulate: accumulator size mismatch");
  }
  if (!sumsq.empty() && sumsq.size() != raw.size()) {
    throw ValidationError("accumulate: variance accumulator size mismatch");
  }
}

// Pixels [x0, x1), all samples in order. Within a tile the loop nest and the
// expressions match the serial kernels term for term, so every pixel sees the
// same sequence of floating-point operations whatever the tiling.
// One contiguous range per thread, rounded to 64 pixels.
std::size_t tile_size(std::size_t pixels, int threads) {
  const std::size_t t = static_cast<std::size_t>(std::max(1, threads));
  return std::max<std::size_t>(64, ((pixels + t - 1) / t + 63) / 64 * 64);
}

void binary_tile(std::span<const double* const> masks, std::size_t pixels, const ScoreMatrix& scores,
                 BinaryWeight weight, double* acc, double* sumsq, std::size_t x0, std::size_t x1) {
  for (std::size_t n = 0; n < masks.size(); ++n) {
    for (std::size_t l = 0; l < scores.cols; ++l) {
      const double s = scores(n, l);
      double* a = acc + l * pixels;
      double* sq = sumsq ? sumsq + l * pixels : nullptr;
      for (std::size_t x = x0; x < x1; ++x) {
        const double c = ((masks[n][x] - weight.offset) * weight.scale) * s;
        a[x] += c;
        if (sq) sq[x] += c * c;
      }
    }
  }
}

void color_tile(const ColorBatch& batch, const ScoreMatrix& scores, double k_over_p, double inv_keep,
                double* raw, double* base, double* sumsq, std::size_t x0, std::size_t x1) {
  const std::size_t k_count = batch.num_colors;
  const std::size_t px = batch.pixels;
  for (std::size_t n = 0; n < batch.nonmasked.size(); ++n) {
    const double* m0 = batch.nonmasked[n];
    for (std::size_t l = 0; l < scores.cols; ++l) {
      const double s = scores(n, l);
      double* b = base + l * px;
      for (std::size_t x = x0; x < x1; ++x) b[x] += (m0[x] * inv_keep) * s;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double* m = batch.channels[n * k_count + k];
        double* r = raw + (l * k_count + k) * px;
        double* sq = sumsq ? sumsq + (l * k_count + k) * px : nullptr;
        for (std::size_t x = x0; x < x1; ++x) {
          const double contribution = (k_over_p * m[x]) * s;
          r[x] += contribution;
          if (sq) {
            const double d = contribution - (m0[x] * inv_keep) * s;
            sq[x] += d * d;
          }
        }
      }
    }
  }
}

}  // namespace

void accumulate_binary_serial(std::span<const double* const> masks, std::size_t pixels,
                              const ScoreMatrix& scores, BinaryWeight weight, std::span<double> acc,
                              std::span<double> sumsq) {
  check_binary(masks, pixels, scores, acc, sumsq);
  const bool track = !sumsq.empty();
  for (std::size_t n = 0; n < masks.size(); ++n) {
    for (std::size_t l = 0; l < scores.cols; ++l) {
      const double s = scores(n, l);
      double* a = acc.data() + l * pixels;
      double* sq = track ? sumsq.data() + l * pixels : nullptr;
      for (std::size_t x = 0; x < pixels; ++x) {
        const double c = ((masks[n][x] - weight.offset) * weight.scale) * s;
        a[x] += c;
        if (track) sq[x] += c * c;
      }
    }
  }
}

void accumulate_binary_omp(std::span<const double* const> masks, std::size_t pixels,
                           const ScoreMatrix& scores, BinaryWeight weight, std::span<double> acc,
                           std::span<double> sumsq, int threads) {
  check_binary(masks, pixels, scores, acc, sumsq);
  double* a = acc.data();
  double* sq = sumsq.empty() ? nullptr : sumsq.data();
  const std::size_t tile = tile_size(pixels, threads);
  const auto tiles = static_cast<std::ptrdiff_t>((pixels + tile - 1) / tile);
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
  for (std::ptrdiff_t t = 0; t < tiles; ++t) {
    const std::size_t x0 = static_cast<std::size_t>(t) * tile;
    binary_tile(masks, pixels, scores, weight, a, sq, x0, std::min(pixels, x0 + tile));
  }
}

void accumulate_color_serial(const ColorBatch& batch, const ScoreMatrix& scores, double p_mask,
                             std::span<double> raw, std::span<double> base, std::span<double> sumsq) {
  check_color(batch, scores, raw, base, sumsq);
  const double k_over_p = static_cast<double>(batch.num_colors) / p_mask;
  const double inv_keep = 1.0 / (1.0 - p_mask);
  const bool track = !sumsq.empty();
  const std::size_t k_count = batch.num_colors;
  const std::size_t px = batch.pixels;
  for (std::size_t n = 0; n < batch.nonmasked.size(); ++n) {
    const double* m0 = batch.nonmasked[n];
    for (std::size_t l = 0; l < scores.cols; ++l) {
      const double s = scores(n, l);
      double* b = base.data() + l * px;
      for (std::size_t x = 0; x < px; ++x) b[x] += (m0[x] * inv_keep) * s;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double* m = batch.channels[n * k_count + k];
        double* r = raw.data() + (l * k_count + k) * px;
        double* sq = track ? sumsq.data() + (l * k_count + k) * px : nullptr;
        for (std::size_t x = 0; x < px; ++x) {
          const double contribution = (k_over_p * m[x]) * s;
          r[x] += contribution;
          if (track) {
            const double d = contribution - (m0[x] * inv_keep) * s;
            sq[x] += d * d;
          }
        }
      }
    }
  }
}

void accumulate_color_omp(const ColorBatch& batch, const ScoreMatrix& scores, double p_mask,
                          std::span<double> raw, std::span<double> base, std::span<double> sumsq,
                          int threads) {
  check_color(batch, scores, raw, base, sumsq);
  const double k_over_p = static_cast<double>(batch.num_colors) / p_mask;
  const double inv_keep = 1.0 / (1.0 - p_mask);
  double* r = raw.data();
  double* b = base.data();
  double* sq = sumsq.empty() ? nullptr : sumsq.data();
  const std::size_t px = batch.pixels;
  const std::size_t tile = tile_size(px, threads);
  const auto tiles = static_cast<std::ptrdiff_t>((px + tile - 1) / tile);
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
  for (std::ptrdiff_t t = 0; t < tiles; ++t) {
    const std::size_t x0 = static_cast<std::size_t>(t) * tile;
    color_tile(batch, scores, k_over_p, inv_keep, r, b, sq, x0, std::min(px, x0 + tile));
  }
}

}  // namespace colorsal::kernels
