#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorsal/image.hpp"

namespace colorsal {

struct Size2 {
  std::size_t height = 0;
  std::size_t width = 0;
};

// Decodes an 8-bit PNG or JPEG (format sniffed from the file header) and
// scales channels by 1/255. Gray and alpha inputs are converted to RGB.
// When `target` is set the result is bilinearly resized to it.
Image load_image(const std::filesystem::path& path, std::optional<Size2> target = std::nullopt);

// Encodes as 8-bit RGB PNG; channels are clamped and rounded.
void save_png(const std::filesystem::path& path, const Image& image);
void save_jpeg(const std::filesystem::path& path, const Image& image, int quality = 95);

// ---- ScalarGrid export ------------------------------------------------------
//
// JSON: {"height": H, "width": W, "data": [[row0...], [row1...], ...]}
// Stacks add "channels": C and nest one more level: data[c][y][x].
//
// Binary: 16-byte header, magic "CSAL", then u32 height, u32 width,
// u32 channels (all little-endian), then channels*H*W little-endian float32
// values, channel-major then row-major.

nlohmann::json grid_to_json(const ScalarGrid& grid);
nlohmann::json stack_to_json(std::span<const ScalarGrid> channels);
ScalarGrid grid_from_json(const nlohmann::json& j);
std::vector<ScalarGrid> stack_from_json(const nlohmann::json& j);

std::vector<std::uint8_t> encode_grid_binary(std::span<const ScalarGrid> channels);
std::vector<ScalarGrid> decode_grid_binary(std::span<const std::uint8_t> bytes);

void write_grid_binary(const std::filesystem::path& path, std::span<const ScalarGrid> channels);
std::vector<ScalarGrid> read_grid_binary(const std::filesystem::path& path);

// Writes `text` exactly (no trailing transformations), throwing on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace colorsal
