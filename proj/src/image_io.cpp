#include "colorsal/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "colorsal/error.hpp"

namespace colorsal {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    // Unreadable inputs are the user's to fix; unwritable outputs are not.
    const std::string msg = "cannot open '" + path.string() + "': " + std::strerror(errno);
    if (mode[0] == 'r') throw ConfigError(msg);
    throw Error(msg);
  }
  return f;
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(c * 255.f));
}

// libpng and libjpeg report errors by longjmp. Each setjmp lives in a small
// helper whose locals are all trivially destructible; buffers are owned by
// the caller.

bool png_read_header(png_structp png, png_infop info, std::FILE* file) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  return true;
}

bool png_read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

Image decode_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png: out of memory");
  }
  auto fail = [&]() {
    png_destroy_read_struct(&png, &info, nullptr);
    return ConfigError("'" + path.string() + "' is not a decodable PNG");
  };
  if (!png_read_header(png, info, file.get())) throw fail();

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  if (width == 0 || height == 0 || stride < std::size_t{width} * 3) throw fail();
  std::vector<png_byte> buffer(stride * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * stride;
  if (!png_read_rows(png, rows.data())) throw fail();
  png_destroy_read_struct(&png, &info, nullptr);

  Image image(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      float* p = image.pixel(y, x);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(rows[y][x * 3 + c]) / 255.f;
    }
  }
  return image;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

bool jpeg_read_header_rgb(jpeg_decompress_struct* cinfo, JpegErrorManager* err, std::FILE* file) {
  if (setjmp(err->jump)) return false;
  jpeg_create_decompress(cinfo);
  jpeg_stdio_src(cinfo, file);
  jpeg_read_header(cinfo, TRUE);
  cinfo->out_color_space = JCS_RGB;
  jpeg_start_decompress(cinfo);
  return true;
}

bool jpeg_read_pixels(jpeg_decompress_struct* cinfo, JpegErrorManager* err, std::uint8_t* out) {
  if (setjmp(err->jump)) return false;
  const std::size_t row_bytes = static_cast<std::size_t>(cinfo->output_width) * 3;
  while (cinfo->output_scanline < cinfo->output_height) {
    JSAMPROW row = out + static_cast<std::size_t>(cinfo->output_scanline) * row_bytes;
    jpeg_read_scanlines(cinfo, &row, 1);
  }
  jpeg_finish_decompress(cinfo);
  return true;
}

Image decode_jpeg(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  err.message[0] = '\0';
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  auto fail = [&]() {
    jpeg_destroy_decompress(&cinfo);
    return ConfigError("'" + path.string() + "' is not a decodable JPEG: " + err.message);
  };
  if (!jpeg_read_header_rgb(&cinfo, &err, file.get())) throw fail();
  const std::size_t width = cinfo.output_width;
  const std::size_t height = cinfo.output_height;
  if (width == 0 || height == 0 || cinfo.output_components != 3) throw fail();
  std::vector<std::uint8_t> pixels(width * height * 3);
  if (!jpeg_read_pixels(&cinfo, &err, pixels.data())) throw fail();
  jpeg_destroy_decompress(&cinfo);

  Image image(height, width);
  auto out = image.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = static_cast<float>(pixels[i]) / 255.f;
  return image;
}

bool png_write_rgb(png_structp png, png_infop info, std::FILE* file, png_uint_32 width,
                   png_uint_32 height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

bool jpeg_write_rgb(jpeg_compress_struct* cinfo, JpegErrorManager* err, std::FILE* file,
                    JDIMENSION width, JDIMENSION height, int quality, std::uint8_t* pixels) {
  if (setjmp(err->jump)) return false;
  jpeg_create_compress(cinfo);
  jpeg_stdio_dest(cinfo, file);
  cinfo->image_width = width;
  cinfo->image_height = height;
  cinfo->input_components = 3;
  cinfo->in_color_space = JCS_RGB;
  jpeg_set_defaults(cinfo);
  jpeg_set_quality(cinfo, quality, TRUE);
  jpeg_start_compress(cinfo, TRUE);
  while (cinfo->next_scanline < cinfo->image_height) {
    JSAMPROW row = pixels + static_cast<std::size_t>(cinfo->next_scanline) * width * 3;
    jpeg_write_scanlines(cinfo, &row, 1);
  }
  jpeg_finish_compress(cinfo);
  return true;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

Image load_image(const std::filesystem::path& path, std::optional<Size2> target) {
  if (target && (target->height == 0 || target->width == 0)) {
    throw ConfigError("load_image: target size must be at least 1x1");
  }
  std::uint8_t magic[8] = {};
  {
    auto f = open_file(path, "rb");
    const std::size_t n = std::fread(magic, 1, sizeof magic, f.get());
    if (n < 3) throw ConfigError("'" + path.string() + "' is too short to be an image");
  }
  Image image;
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(magic, kPng, 8) == 0) {
    image = decode_png(path);
  } else if (magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    image = decode_jpeg(path);
  } else {
    throw ConfigError("'" + path.string() + "': unsupported image format (expected PNG or JPEG)");
  }
  if (target) image = resize_image(image, target->height, target->width);
  return image;
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) throw ValidationError("save_png: empty image");
  std::vector<png_byte> buffer(image.pixels() * 3);
  std::vector<png_bytep> rows(image.height());
  auto src = image.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = to_byte(src[i]);
  for (std::size_t y = 0; y < image.height(); ++y) rows[y] = buffer.data() + y * image.width() * 3;

  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: out of memory");
  }
  const bool ok = png_write_rgb(png, info, file.get(), static_cast<png_uint_32>(image.width()),
                                static_cast<png_uint_32>(image.height()), rows.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error("failed to write PNG '" + path.string() + "'");
}

void save_jpeg(const std::filesystem::path& path, const Image& image, int quality) {
  if (image.empty()) throw ValidationError("save_jpeg: empty image");
  std::vector<std::uint8_t> pixels(image.pixels() * 3);
  auto src = image.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = to_byte(src[i]);

  auto file = open_file(path, "wb");
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  err.message[0] = '\0';
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  const bool ok = jpeg_write_rgb(&cinfo, &err, file.get(), static_cast<JDIMENSION>(image.width()),
                                 static_cast<JDIMENSION>(image.height()), quality, pixels.data());
  jpeg_destroy_compress(&cinfo);
  if (!ok) throw Error("failed to write JPEG '" + path.string() + "': " + err.message);
}

nlohmann::json grid_to_json(const ScalarGrid& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t y = 0; y < grid.height(); ++y) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t x = 0; x < grid.width(); ++x) row.push_back(grid(y, x));
    rows.push_back(std::move(row));
  }
  return {{"height", grid.height()}, {"width", grid.width()}, {"data", std::move(rows)}};
}

nlohmann::json stack_to_json(std::span<const ScalarGrid> channels) {
  if (channels.empty()) throw ValidationError("stack_to_json: no channels");
  nlohmann::json data = nlohmann::json::array();
  for (const auto& ch : channels) {
    if (!ch.same_shape(channels.front())) throw ValidationError("stack_to_json: ragged stack");
    data.push_back(grid_to_json(ch)["data"]);
  }
  return {{"height", channels.front().height()},
          {"width", channels.front().width()},
          {"channels", channels.size()},
          {"data", std::move(data)}};
}

namespace {

ScalarGrid rows_to_grid(const nlohmann::json& rows, std::size_t height, std::size_t width) {
  if (!rows.is_array() || rows.size() != height) {
    throw ValidationError("grid JSON: expected " + std::to_string(height) + " rows");
  }
  ScalarGrid grid(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const auto& row = rows[y];
    if (!row.is_array() || row.size() != width) {
      throw ValidationError("grid JSON: row " + std::to_string(y) + " has wrong length");
    }
    for (std::size_t x = 0; x < width; ++x) grid(y, x) = row[x].get<double>();
  }
  return grid;
}

}  // namespace

ScalarGrid grid_from_json(const nlohmann::json& j) {
  try {
    return rows_to_grid(j.at("data"), j.at("height").get<std::size_t>(),
                        j.at("width").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("grid JSON: ") + e.what());
  }
}

std::vector<ScalarGrid> stack_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("channels")) return {grid_from_json(j)};
    const auto height = j.at("height").get<std::size_t>();
    const auto width = j.at("width").get<std::size_t>();
    const auto channels = j.at("channels").get<std::size_t>();
    const auto& data = j.at("data");
    if (!data.is_array() || data.size() != channels) {
      throw ValidationError("stack JSON: channel count mismatch");
    }
    std::vector<ScalarGrid> out;
    for (const auto& rows : data) out.push_back(rows_to_grid(rows, height, width));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("stack JSON: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_grid_binary(std::span<const ScalarGrid> channels) {
  if (channels.empty()) throw ValidationError("encode_grid_binary: no channels");
  const auto& first = channels.front();
  std::vector<std::uint8_t> out = {'C', 'S', 'A', 'L'};
  put_u32(out, static_cast<std::uint32_t>(first.height()));
  put_u32(out, static_cast<std::uint32_t>(first.width()));
  put_u32(out, static_cast<std::uint32_t>(channels.size()));
  out.reserve(16 + channels.size() * first.size() * 4);
  for (const auto& ch : channels) {
    if (!ch.same_shape(first)) throw ValidationError("encode_grid_binary: ragged stack");
    for (double v : ch.data()) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  return out;
}

std::vector<ScalarGrid> decode_grid_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "CSAL", 4) != 0) {
    throw ValidationError("grid binary: missing CSAL header");
  }
  const std::size_t height = get_u32(bytes, 4);
  const std::size_t width = get_u32(bytes, 8);
  const std::size_t channels = get_u32(bytes, 12);
  if (bytes.size() != 16 + height * width * channels * 4) {
    throw ValidationError("grid binary: payload size does not match header");
  }
  std::vector<ScalarGrid> out;
  std::size_t offset = 16;
  for (std::size_t c = 0; c < channels; ++c) {
    ScalarGrid grid(height, width);
    for (std::size_t i = 0; i < grid.size(); ++i, offset += 4) {
      const std::uint32_t bits = get_u32(bytes, offset);
      float f;
      std::memcpy(&f, &bits, 4);
      grid[i] = f;
    }
    out.push_back(std::move(grid));
  }
  return out;
}

void write_grid_binary(const std::filesystem::path& path, std::span<const ScalarGrid> channels) {
  const auto bytes = encode_grid_binary(channels);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

std::vector<ScalarGrid> read_grid_binary(const std::filesystem::path& path) {
  return decode_grid_binary(read_file_bytes(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace colorsal
