#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace colorsal {

using Rgb = std::array<float, 3>;

// H x W grid of RGB triples, channels in [0,1], stored interleaved row-major.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, Rgb fill = {0.f, 0.f, 0.f});

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return height_ * width_; }
  bool empty() const { return pixels() == 0; }

  float* pixel(std::size_t y, std::size_t x) { return &data_[(y * width_ + x) * 3]; }
  const float* pixel(std::size_t y, std::size_t x) const { return &data_[(y * width_ + x) * 3]; }
  float* pixel(std::size_t index) { return &data_[index * 3]; }
  const float* pixel(std::size_t index) const { return &data_[index * 3]; }

  Rgb at(std::size_t y, std::size_t x) const;
  void set(std::size_t y, std::size_t x, Rgb value);

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

// H x W grid of doubles. Holds saliency values (signed) and mask values ([0,1]).
class ScalarGrid {
 public:
  ScalarGrid() = default;
  ScalarGrid(std::size_t height, std::size_t width, double fill = 0.0);
  ScalarGrid(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t y, std::size_t x) { return data_[y * width_ + x]; }
  double operator()(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const ScalarGrid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const ScalarGrid&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Per-axis half-pixel-center bilinear sampling table. Output coordinate x maps
// to input coordinate (x + 0.5) * in / out - 0.5, clamped to [0, in - 1].
struct AxisSampling {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;
  std::vector<double> frac;  // weight of `hi`

  static AxisSampling make(std::size_t in, std::size_t out);
};

// Throws ConfigError when out_height or out_width is zero.
ScalarGrid bilinear_resize(const ScalarGrid& grid, std::size_t out_height, std::size_t out_width);

// Image resize using the same sampling convention, per channel.
Image resize_image(const Image& image, std::size_t out_height, std::size_t out_width);

}  // namespace colorsal
