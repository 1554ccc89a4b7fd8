#include "colorsal/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "colorsal/error.hpp"

namespace colorsal {
namespace {

std::uint8_t draw_cell(std::size_t num_colors, double p, SampleStream& rng) {
  if (num_colors == 0) return rng.bernoulli(p) ? 1 : 0;
  if (!rng.bernoulli(p)) return 0;
  return static_cast<std::uint8_t>(1 + rng.below(num_colors));
}

LowResMask draw_grid(std::size_t h, std::size_t w, std::size_t num_colors, double p,
                     SampleStream& rng) {
  LowResMask m{h, w, num_colors, std::vector<std::uint8_t>(h * w)};
  for (auto& s : m.state) s = draw_cell(num_colors, p, rng);
  return m;
}

// Extra column for rows 0..h-1, then the extra row left to right.
LowResMask pad_one_cell(const LowResMask& m, double p, SampleStream& rng) {
  LowResMask out{m.height + 1, m.width + 1, m.num_colors,
                 std::vector<std::uint8_t>((m.height + 1) * (m.width + 1))};
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) out.state[y * out.width + x] = m(y, x);
  }
  for (std::size_t y = 0; y < m.height; ++y) {
    out.state[y * out.width + m.width] = draw_cell(m.num_colors, p, rng);
  }
  for (std::size_t x = 0; x <= m.width; ++x) {
    out.state[m.height * out.width + x] = draw_cell(m.num_colors, p, rng);
  }
  return out;
}

AxisSampling nearest_sampling(std::size_t in, std::size_t out) {
  AxisSampling s;
  s.lo.resize(out);
  s.frac.assign(out, 0.0);
  for (std::size_t x = 0; x < out; ++x) s.lo[x] = std::min(x * in / out, in - 1);
  s.hi = s.lo;
  return s;
}

ScalarGrid nearest_resize(const ScalarGrid& g, std::size_t out_h, std::size_t out_w) {
  ScalarGrid out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const std::size_t sy = std::min(y * g.height() / out_h, g.height() - 1);
    for (std::size_t x = 0; x < out_w; ++x) {
      out(y, x) = g(sy, std::min(x * g.width() / out_w, g.width() - 1));
    }
  }
  return out;
}

void check_same_shape(const Image& image, const ScalarGrid& grid, const char* what) {
  if (grid.height() != image.height() || grid.width() != image.width()) {
    throw ValidationError(std::string(what) + ": mask is " + std::to_string(grid.height()) + "x" +
                          std::to_string(grid.width()) + ", image is " +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
}

}  // namespace

void RunConfig::validate() const {
  if (num_masks == 0) throw ConfigError("num_masks must be positive");
  if (!(p_mask > 0.0 && p_mask < 1.0)) {
    throw ConfigError("p_mask must lie strictly between 0 and 1 (got " + std::to_string(p_mask) + ")");
  }
  if (cell_h == 0 || cell_w == 0) throw ConfigError("cell grid must be at least 1x1");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (colors.size() > 255) throw ConfigError("at most 255 masking colors are supported");
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (float c : colors[i]) {
      if (!(c >= 0.f && c <= 1.f)) throw ConfigError("color channels must lie in [0,1]");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (colors[i] == colors[j]) throw ConfigError("color set entries must be distinct");
    }
  }
}

void RunConfig::validate_for(std::size_t height, std::size_t width) const {
  validate();
  if (cell_h > height || cell_w > width) {
    throw ConfigError("cell grid " + std::to_string(cell_h) + "x" + std::to_string(cell_w) +
                      " is finer than the " + std::to_string(height) + "x" +
                      std::to_string(width) + " image");
  }
}

std::vector<Rgb> default_palette() {
  return {{1.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, {0.f, 0.f, 1.f}, {1.f, 1.f, 1.f}, {0.f, 0.f, 0.f}};
}

ScalarGrid LowResMask::channel(std::size_t k) const {
  ScalarGrid g(height, width);
  const std::uint8_t want = num_colors == 0 ? 1 : static_cast<std::uint8_t>(k);
  for (std::size_t i = 0; i < state.size(); ++i) g[i] = state[i] == want ? 1.0 : 0.0;
  return g;
}

std::vector<ScalarGrid> LowResMask::channels() const {
  std::vector<ScalarGrid> out;
  if (num_colors == 0) {
    out.push_back(channel(1));
  } else {
    for (std::size_t k = 1; k <= num_colors; ++k) out.push_back(channel(k));
  }
  return out;
}

LowResMask sample_binary_lowres(const RunConfig& cfg, SampleStream& rng) {
  cfg.validate();
  return draw_grid(cfg.cell_h, cfg.cell_w, 0, cfg.p_mask, rng);
}

LowResMask sample_color_lowres(const RunConfig& cfg, SampleStream& rng) {
  cfg.validate();
  if (cfg.colors.empty()) throw ConfigError("color masks need at least one color");
  return draw_grid(cfg.cell_h, cfg.cell_w, cfg.colors.size(), cfg.p_mask, rng);
}

UpsampledMask upsample_and_shift(const LowResMask& lowres, std::size_t height, std::size_t width,
                                 SampleStream& rng, const RunConfig& cfg) {
  if (lowres.height == 0 || lowres.width == 0 || lowres.height > height || lowres.width > width) {
    throw ValidationError("upsample_and_shift: low-res grid must be non-empty and no larger than " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t cell_h = height / lowres.height;
  const std::size_t cell_w = width / lowres.width;
  const LowResMask grid = cfg.shift ? pad_one_cell(lowres, cfg.p_mask, rng) : lowres;
  const std::size_t big_h = cfg.shift ? height + cell_h : height;
  const std::size_t big_w = cfg.shift ? width + cell_w : width;

  UpsampledMask out;
  std::vector<ScalarGrid> big;
  for (const auto& ch : grid.channels()) {
    big.push_back(cfg.interpolate ? bilinear_resize(ch, big_h, big_w) : nearest_resize(ch, big_h, big_w));
  }
  if (cfg.shift) {
    out.offset_y = rng.below(cell_h);
    out.offset_x = rng.below(cell_w);
  }
  for (const auto& b : big) {
    ScalarGrid crop(height, width);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) crop(y, x) = b(y + out.offset_y, x + out.offset_x);
    }
    out.channels.push_back(std::move(crop));
  }
  return out;
}

ScalarGrid nonmasked_map(std::span<const ScalarGrid> channels) {
  if (channels.empty()) throw ValidationError("nonmasked_map: no channels");
  ScalarGrid m0(channels.front().height(), channels.front().width());
  for (std::size_t i = 0; i < m0.size(); ++i) {
    double sum = 0.0;
    for (const auto& ch : channels) {
      if (!ch.same_shape(m0)) throw ValidationError("nonmasked_map: ragged channels");
      sum += ch[i];
    }
    if (sum > 1.0 + 1e-9) {
      throw ValidationError("nonmasked_map: channel sum " + std::to_string(sum) +
                            " exceeds 1 at pixel " + std::to_string(i));
    }
    m0[i] = std::clamp(1.0 - sum, 0.0, 1.0);
  }
  return m0;
}

Image apply_binary_mask(const Image& image, const BinaryMaskSample& mask) {
  check_same_shape(image, mask.mask, "apply_binary_mask");
  Image out(image.height(), image.width());
  auto dst = out.data();
  auto src = image.data();
  for (std::size_t i = 0; i < image.pixels(); ++i) {
    const double m = mask.mask[i];
    for (std::size_t c = 0; c < 3; ++c) dst[i * 3 + c] = static_cast<float>(src[i * 3 + c] * m);
  }
  return out;
}

Image apply_color_mask(const Image& image, const ColorMaskSample& sample, std::span<const Rgb> colors) {
  if (sample.channels.size() != colors.size()) {
    throw ValidationError("apply_color_mask: " + std::to_string(sample.channels.size()) +
                          " mask channels but " + std::to_string(colors.size()) + " colors");
  }
  check_same_shape(image, sample.nonmasked, "apply_color_mask");
  for (const auto& ch : sample.channels) check_same_shape(image, ch, "apply_color_mask");
  Image out(image.height(), image.width());
  auto dst = out.data();
  auto src = image.data();
  for (std::size_t i = 0; i < image.pixels(); ++i) {
    const double m0 = sample.nonmasked[i];
    for (std::size_t c = 0; c < 3; ++c) {
      double v = src[i * 3 + c] * m0;
      for (std::size_t k = 0; k < colors.size(); ++k) v += colors[k][c] * sample.channels[k][i];
      dst[i * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

// ---- MaskGenerator ------------------------------------------------------------

MaskGenerator::MaskGenerator(const RunConfig& cfg, std::size_t height, std::size_t width)
    : cfg_(cfg), height_(height), width_(width) {
  cfg_.validate_for(height, width);
  const std::size_t grid_h = cfg_.shift ? cfg_.cell_h + 1 : cfg_.cell_h;
  const std::size_t grid_w = cfg_.shift ? cfg_.cell_w + 1 : cfg_.cell_w;
  big_h_ = cfg_.shift ? height + height / cfg_.cell_h : height;
  big_w_ = cfg_.shift ? width + width / cfg_.cell_w : width;
  rows_ = cfg_.interpolate ? AxisSampling::make(grid_h, big_h_) : nearest_sampling(grid_h, big_h_);
  cols_ = cfg_.interpolate ? AxisSampling::make(grid_w, big_w_) : nearest_sampling(grid_w, big_w_);
}

MaskGenerator::Placement MaskGenerator::place(LowResMask lowres, SampleStream& rng) const {
  Placement p;
  if (cfg_.shift) {
    p.lowres = pad_one_cell(lowres, cfg_.p_mask, rng);
    p.offset_y = rng.below(height_ / cfg_.cell_h);
    p.offset_x = rng.below(width_ / cfg_.cell_w);
  } else {
    p.lowres = std::move(lowres);
  }
  return p;
}

template <typename Fn>
void MaskGenerator::for_each_pixel(const Placement& p, Fn&& fn) const {
  const auto& g = p.lowres;
  for (std::size_t y = 0; y < height_; ++y) {
    const std::size_t by = y + p.offset_y;
    const double fy = rows_.frac[by];
    const std::size_t r0 = rows_.lo[by] * g.width;
    const std::size_t r1 = rows_.hi[by] * g.width;
    for (std::size_t x = 0; x < width_; ++x) {
      const std::size_t bx = x + p.offset_x;
      const double fx = cols_.frac[bx];
      const std::size_t c0 = cols_.lo[bx];
      const std::size_t c1 = cols_.hi[bx];
      fn(y * width_ + x, g.state[r0 + c0], g.state[r0 + c1], g.state[r1 + c0], g.state[r1 + c1], fy, fx);
    }
  }
}

void MaskGenerator::binary_into(std::uint64_t index, BinaryMaskSample& out) const {
  SampleStream rng(cfg_.seed, index);
  const Placement p = place(draw_grid(cfg_.cell_h, cfg_.cell_w, 0, cfg_.p_mask, rng), rng);
  if (out.mask.height() != height_ || out.mask.width() != width_) out.mask = ScalarGrid(height_, width_);
  auto mask = out.mask.data();
  for_each_pixel(p, [&](std::size_t i, std::uint8_t a, std::uint8_t b, std::uint8_t c,
                        std::uint8_t d, double fy, double fx) {
    const double top = (1.0 - fx) * a + fx * b;
    const double bottom = (1.0 - fx) * c + fx * d;
    mask[i] = (1.0 - fy) * top + fy * bottom;
  });
}

void MaskGenerator::color_into(std::uint64_t index, ColorMaskSample& out) const {
  const std::size_t k = cfg_.colors.size();
  if (k == 0) throw ConfigError("color masks need at least one color");
  SampleStream rng(cfg_.seed, index);
  const Placement p = place(draw_grid(cfg_.cell_h, cfg_.cell_w, k, cfg_.p_mask, rng), rng);

  if (out.channels.size() != k) out.channels.resize(k);
  for (auto& ch : out.channels) {
    if (ch.height() != height_ || ch.width() != width_) {
      ch = ScalarGrid(height_, width_);
    } else {
      std::fill(ch.data().begin(), ch.data().end(), 0.0);
    }
  }
  if (out.nonmasked.height() != height_ || out.nonmasked.width() != width_) {
    out.nonmasked = ScalarGrid(height_, width_);
  }
  std::vector<double*> chan(k + 1, nullptr);
  for (std::size_t c = 0; c < k; ++c) chan[c + 1] = out.channels[c].data().data();
  auto m0 = out.nonmasked.data();

  for_each_pixel(p, [&](std::size_t i, std::uint8_t a, std::uint8_t b, std::uint8_t c,
                        std::uint8_t d, double fy, double fx) {
    // Each state present at the four corners gets the resize expression of
    // its one-hot channel, so the result matches the generic path exactly.
    const std::uint8_t corners[4] = {a, b, c, d};
    for (int q = 0; q < 4; ++q) {
      const std::uint8_t j = corners[q];
      if (j == 0 || (q > 0 && j == a) || (q > 1 && j == b) || (q > 2 && j == c)) continue;
      const double top = (1.0 - fx) * (a == j) + fx * (b == j);
      const double bottom = (1.0 - fx) * (c == j) + fx * (d == j);
      chan[j][i] = (1.0 - fy) * top + fy * bottom;
    }
    double sum = 0.0;
    for (std::size_t j = 1; j <= k; ++j) sum += chan[j][i];
    m0[i] = std::clamp(1.0 - sum, 0.0, 1.0);
  });
}

BinaryMaskSample MaskGenerator::binary(std::uint64_t index) const {
  BinaryMaskSample out;
  binary_into(index, out);
  return out;
}

ColorMaskSample MaskGenerator::color(std::uint64_t index) const {
  ColorMaskSample out;
  color_into(index, out);
  return out;
}

BinaryMaskSample MaskGenerator::reference_binary(std::uint64_t index) const {
  SampleStream rng(cfg_.seed, index);
  const LowResMask low = sample_binary_lowres(cfg_, rng);
  auto up = upsample_and_shift(low, height_, width_, rng, cfg_);
  return {std::move(up.channels.front())};
}

ColorMaskSample MaskGenerator::reference_color(std::uint64_t index) const {
  SampleStream rng(cfg_.seed, index);
  const LowResMask low = sample_color_lowres(cfg_, rng);
  auto up = upsample_and_shift(low, height_, width_, rng, cfg_);
  ColorMaskSample out;
  out.nonmasked = nonmasked_map(up.channels);
  out.channels = std::move(up.channels);
  return out;
}

}  // namespace colorsal
