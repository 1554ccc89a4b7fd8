#include "colorsal/image.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "colorsal/error.hpp"

namespace colorsal {

Image::Image(std::size_t height, std::size_t width, Rgb fill)
    : height_(height), width_(width), data_(height * width * 3) {
  for (std::size_t i = 0; i < height * width; ++i) {
    std::copy(fill.begin(), fill.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
}

Rgb Image::at(std::size_t y, std::size_t x) const {
  const float* p = pixel(y, x);
  return {p[0], p[1], p[2]};
}

void Image::set(std::size_t y, std::size_t x, Rgb value) {
  float* p = pixel(y, x);
  p[0] = value[0];
  p[1] = value[1];
  p[2] = value[2];
}

ScalarGrid::ScalarGrid(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {}

ScalarGrid::ScalarGrid(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), data_(std::move(values)) {
  if (data_.size() != height * width) {
    throw ValidationError("ScalarGrid: value count does not match " + std::to_string(height) +
                          "x" + std::to_string(width));
  }
}

AxisSampling AxisSampling::make(std::size_t in, std::size_t out) {
  AxisSampling s;
  s.lo.resize(out);
  s.hi.resize(out);
  s.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double max_coord = static_cast<double>(in - 1);
  for (std::size_t x = 0; x < out; ++x) {
    double src = (static_cast<double>(x) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, max_coord);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    s.lo[x] = lo;
    s.hi[x] = std::min(lo + 1, in - 1);
    s.frac[x] = src - static_cast<double>(lo);
  }
  return s;
}

ScalarGrid bilinear_resize(const ScalarGrid& grid, std::size_t out_height, std::size_t out_width) {
  if (out_height == 0 || out_width == 0) {
    throw ConfigError("bilinear_resize: output size must be at least 1x1");
  }
  if (grid.height() == 0 || grid.width() == 0) {
    throw ValidationError("bilinear_resize: empty input grid");
  }
  const auto rows = AxisSampling::make(grid.height(), out_height);
  const auto cols = AxisSampling::make(grid.width(), out_width);
  ScalarGrid out(out_height, out_width);
  for (std::size_t y = 0; y < out_height; ++y) {
    const double fy = rows.frac[y];
    for (std::size_t x = 0; x < out_width; ++x) {
      const double fx = cols.frac[x];
      const double top = (1.0 - fx) * grid(rows.lo[y], cols.lo[x]) + fx * grid(rows.lo[y], cols.hi[x]);
      const double bottom =
          (1.0 - fx) * grid(rows.hi[y], cols.lo[x]) + fx * grid(rows.hi[y], cols.hi[x]);
      out(y, x) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Image resize_image(const Image& image, std::size_t out_height, std::size_t out_width) {
  if (out_height == 0 || out_width == 0) {
    throw ConfigError("resize_image: output size must be at least 1x1");
  }
  if (image.empty()) throw ValidationError("resize_image: empty input image");
  if (out_height == image.height() && out_width == image.width()) return image;

  const auto rows = AxisSampling::make(image.height(), out_height);
  const auto cols = AxisSampling::make(image.width(), out_width);
  Image out(out_height, out_width);
  for (std::size_t y = 0; y < out_height; ++y) {
    const double fy = rows.frac[y];
    for (std::size_t x = 0; x < out_width; ++x) {
      const double fx = cols.frac[x];
      const float* a = image.pixel(rows.lo[y], cols.lo[x]);
      const float* b = image.pixel(rows.lo[y], cols.hi[x]);
      const float* c = image.pixel(rows.hi[y], cols.lo[x]);
      const float* d = image.pixel(rows.hi[y], cols.hi[x]);
      float* o = out.pixel(y, x);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - fx) * a[ch] + fx * b[ch];
        const double bottom = (1.0 - fx) * c[ch] + fx * d[ch];
        o[ch] = static_cast<float>(std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace colorsal
