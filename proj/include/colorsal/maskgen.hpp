#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "colorsal/image.hpp"
#include "colorsal/rng.hpp"

namespace colorsal {

// All sampling parameters of a run.
struct RunConfig {
  std::size_t num_masks = 8000;
  double p_mask = 0.5;
  std::size_t cell_h = 8;
  std::size_t cell_w = 8;
  std::vector<Rgb> colors;  // empty for binary-mask estimators
  std::uint64_t seed = 0;
  bool interpolate = true;
  bool shift = true;
  std::size_t batch_size = 32;

  std::size_t num_colors() const { return colors.size(); }

  // Throws ConfigError: N = 0, p outside (0,1), zero cells or batch,
  // duplicate or out-of-range colors.
  void validate() const;
  // validate() plus h <= H, w <= W.
  void validate_for(std::size_t height, std::size_t width) const;
};

// Red, green, blue, white, black.
std::vector<Rgb> default_palette();

// Low-resolution cell states. Binary masks: 1 = retained, 0 = dropped.
// Color masks: 0 = unmasked, k in 1..K = masked with color k.
struct LowResMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_colors = 0;  // 0 for binary masks
  std::vector<std::uint8_t> state;

  std::uint8_t operator()(std::size_t y, std::size_t x) const { return state[y * width + x]; }

  // Binary: the mask itself. Color: one-hot channel for color k (1-based).
  ScalarGrid channel(std::size_t k) const;
  // Binary: {mask}. Color: K channels in palette order.
  std::vector<ScalarGrid> channels() const;
};

// Each cell independently 1 with probability p_mask.
LowResMask sample_binary_lowres(const RunConfig& cfg, SampleStream& rng);
// Each cell masked with probability p_mask, color uniform over 1..K.
LowResMask sample_color_lowres(const RunConfig& cfg, SampleStream& rng);

struct UpsampledMask {
  std::vector<ScalarGrid> channels;
  std::size_t offset_y = 0;
  std::size_t offset_x = 0;
};

// Reference upsampling. With shift enabled an extra row and column are drawn
// from the same per-cell distribution (extra column for rows 0..h-1 first,
// then the extra row left to right), every channel is resized to
// (H + H/h) x (W + W/w) and an H x W window at a uniform offset in
// [0, H/h) x [0, W/w) is cropped. Without interpolation the resize is
// nearest-neighbor. All channels share the offset.
UpsampledMask upsample_and_shift(const LowResMask& lowres, std::size_t height, std::size_t width,
                                 SampleStream& rng, const RunConfig& cfg);

// 1 - sum_k channels[k], clamped to [0,1]. Throws ValidationError when the
// channel sum exceeds 1 by more than 1e-9 anywhere.
ScalarGrid nonmasked_map(std::span<const ScalarGrid> channels);

struct BinaryMaskSample {
  ScalarGrid mask;
};

struct ColorMaskSample {
  std::vector<ScalarGrid> channels;  // K grids, palette order
  ScalarGrid nonmasked;
};

Image apply_binary_mask(const Image& image, const BinaryMaskSample& mask);
// i * m0 + sum_k c_k * m_k, clamped to [0,1].
Image apply_color_mask(const Image& image, const ColorMaskSample& sample, std::span<const Rgb> colors);

// Produces mask n of a run from (seed, n) alone. The fast path only touches
// the channels of the (at most four) states around each pixel and evaluates
// the same bilinear expression there, so it reproduces resizing every one-hot
// channel separately bit for bit; reference_* run the generic path.
class MaskGenerator {
 public:
  MaskGenerator(const RunConfig& cfg, std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  const RunConfig& config() const { return cfg_; }

  BinaryMaskSample binary(std::uint64_t index) const;
  ColorMaskSample color(std::uint64_t index) const;

  // Overwrite-in-place variants for preallocated buffers.
  void binary_into(std::uint64_t index, BinaryMaskSample& out) const;
  void color_into(std::uint64_t index, ColorMaskSample& out) const;

  BinaryMaskSample reference_binary(std::uint64_t index) const;
  ColorMaskSample reference_color(std::uint64_t index) const;

 private:
  struct Placement {
    LowResMask lowres;  // padded when shifting
    std::size_t offset_y = 0;
    std::size_t offset_x = 0;
  };
  Placement place(LowResMask lowres, SampleStream& rng) const;
  // Weights of the four neighbor cells for output pixel (y, x).
  template <typename Fn>
  void for_each_pixel(const Placement& p, Fn&& fn) const;

  RunConfig cfg_;
  std::size_t height_;
  std::size_t width_;
  std::size_t big_h_;
  std::size_t big_w_;
  AxisSampling rows_;  // over the padded grid when shifting
  AxisSampling cols_;
};

}  // namespace colorsal
