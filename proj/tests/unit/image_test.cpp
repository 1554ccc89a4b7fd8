#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "colorsal/error.hpp"
#include "colorsal/heatmap.hpp"
#include "colorsal/image.hpp"
#include "colorsal/image_io.hpp"

using namespace colorsal;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "colorsal_image_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(BilinearResize, ConstantGridStaysConstant) {
  const ScalarGrid g(3, 5, 0.5);
  for (auto [h, w] : {std::pair{1, 1}, {7, 2}, {13, 17}}) {
    const ScalarGrid out = bilinear_resize(g, h, w);
    ASSERT_EQ(out.height(), std::size_t(h));
    for (double v : out.data()) EXPECT_EQ(v, 0.5);
  }
}

TEST(BilinearResize, TwoPixelRampIsMonotoneWithEndpoints) {
  const ScalarGrid g(1, 2, {0.0, 1.0});
  const ScalarGrid out = bilinear_resize(g, 1, 4);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[3], 1.0);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_LE(out[i - 1], out[i]);
}

TEST(BilinearResize, IsLinear) {
  ScalarGrid a(3, 4), b(3, 4), sum(3, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    a[i] = std::sin(double(i));
    b[i] = std::cos(3.0 * double(i));
    sum[i] = 0.3 * a[i] + 0.6 * b[i];
  }
  const ScalarGrid ra = bilinear_resize(a, 11, 9), rb = bilinear_resize(b, 11, 9);
  const ScalarGrid rs = bilinear_resize(sum, 11, 9);
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_NEAR(rs[i], 0.3 * ra[i] + 0.6 * rb[i], 1e-12);
}

TEST(BilinearResize, OneHotChannelsStillSumToOne) {
  // Each cell carries one of three states; the three indicator maps resized
  // separately must still partition unity.
  const std::vector<int> state{0, 1, 2, 2, 1, 0};
  std::vector<ScalarGrid> hot(3, ScalarGrid(2, 3));
  for (std::size_t i = 0; i < state.size(); ++i) hot[state[i]][i] = 1.0;
  std::vector<ScalarGrid> up;
  for (const auto& g : hot) up.push_back(bilinear_resize(g, 9, 14));
  for (std::size_t i = 0; i < up[0].size(); ++i) {
    EXPECT_NEAR(up[0][i] + up[1][i] + up[2][i], 1.0, 1e-12);
  }
}

TEST(BilinearResize, ZeroTargetThrows) {
  EXPECT_THROW(bilinear_resize(ScalarGrid(2, 2), 0, 3), ConfigError);
  EXPECT_THROW(bilinear_resize(ScalarGrid(2, 2), 3, 0), ConfigError);
}

TEST(ImageIo, RedPixelPngScalesToUnit) {
  const fs::path p = temp_path("red.png");
  save_png(p, Image(1, 1, {1.f, 0.f, 0.f}));
  const Image img = load_image(p);
  ASSERT_EQ(img.height(), 1u);
  ASSERT_EQ(img.width(), 1u);
  EXPECT_EQ(img.at(0, 0), (Rgb{1.f, 0.f, 0.f}));
}

TEST(ImageIo, SameSizeTargetLeavesValuesUnchanged) {
  Image src(2, 2);
  src.set(0, 0, {10 / 255.f, 20 / 255.f, 30 / 255.f});
  src.set(0, 1, {1.f, 1.f, 1.f});
  src.set(1, 0, {0.f, 128 / 255.f, 0.f});
  src.set(1, 1, {64 / 255.f, 0.f, 200 / 255.f});
  const fs::path p = temp_path("square.png");
  save_png(p, src);
  EXPECT_EQ(load_image(p, Size2{2, 2}), load_image(p));
  EXPECT_EQ(load_image(p), src);
}

TEST(ImageIo, TargetResizes) {
  const fs::path p = temp_path("grey.png");
  save_png(p, Image(4, 4, {0.2f, 0.2f, 0.2f}));
  const Image img = load_image(p, Size2{3, 7});
  EXPECT_EQ(img.height(), 3u);
  EXPECT_EQ(img.width(), 7u);
}

TEST(ImageIo, JpegRoundTripIsClose) {
  const fs::path p = temp_path("flat.jpg");
  save_jpeg(p, Image(8, 8, {0.5f, 0.25f, 0.75f}));
  const Image img = load_image(p);
  ASSERT_EQ(img.pixels(), 64u);
  for (float v : img.data()) EXPECT_GE(v, 0.f);
  EXPECT_NEAR(img.at(3, 3)[0], 0.5f, 0.05f);
  EXPECT_NEAR(img.at(3, 3)[2], 0.75f, 0.05f);
}

TEST(ImageIo, BadInputsFail) {
  EXPECT_THROW(load_image(temp_path("missing.png")), ConfigError);
  const fs::path junk = temp_path("junk.png");
  std::ofstream(junk) << "definitely not an image";
  EXPECT_THROW(load_image(junk), ConfigError);
  const fs::path p = temp_path("ok.png");
  save_png(p, Image(2, 2));
  EXPECT_THROW(load_image(p, Size2{0, 2}), ConfigError);
}

TEST(GridExport, JsonRoundTrip) {
  ScalarGrid g(2, 3, {0.1, -0.2, 0.3, 1e-300, -7.5, 0.0});
  const auto j = grid_to_json(g);
  EXPECT_EQ(j["height"], 2);
  EXPECT_EQ(j["width"], 3);
  EXPECT_EQ(j["data"][1][1], -7.5);
  EXPECT_EQ(grid_from_json(j), g);

  std::vector<ScalarGrid> stack{g, ScalarGrid(2, 3, 0.25)};
  const auto js = stack_to_json(stack);
  EXPECT_EQ(js["channels"], 2);
  EXPECT_EQ(stack_from_json(js), stack);
}

TEST(GridExport, BinaryHeaderAndRoundTrip) {
  std::vector<ScalarGrid> stack{ScalarGrid(2, 3, {0.5, -1, 2, 0.25, 0, 1}), ScalarGrid(2, 3, 0.75)};
  const auto bytes = encode_grid_binary(stack);
  ASSERT_EQ(bytes.size(), 16u + 2 * 6 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CSAL");
  EXPECT_EQ(bytes[4], 2);  // height, little-endian
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(decode_grid_binary(bytes), stack);  // values exactly representable in float

  const fs::path p = temp_path("stack.bin");
  write_grid_binary(p, stack);
  EXPECT_EQ(read_grid_binary(p), stack);
  EXPECT_EQ(read_file_bytes(p), bytes);
}

TEST(GridExport, TruncatedBinaryThrows) {
  auto bytes = encode_grid_binary(std::vector<ScalarGrid>{ScalarGrid(2, 2, 1.0)});
  bytes.pop_back();
  EXPECT_THROW(decode_grid_binary(bytes), Error);
  bytes[0] = 'X';
  EXPECT_THROW(decode_grid_binary(bytes), Error);
}

TEST(Heatmap, ZeroMapSignedIsMidColor) {
  const Image img = render_heatmap(ScalarGrid(3, 3, 0.0), HeatmapMode::kSigned);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(img.at(y, x), diverging_mid_color());
}

TEST(Heatmap, SignedThreeValuesAreDistinct) {
  const Image img = render_heatmap(ScalarGrid(1, 3, {-1.0, 0.0, 1.0}), HeatmapMode::kSigned);
  EXPECT_NE(img.at(0, 0), img.at(0, 1));
  EXPECT_NE(img.at(0, 1), img.at(0, 2));
  EXPECT_NE(img.at(0, 0), img.at(0, 2));
  EXPECT_EQ(img.at(0, 1), diverging_mid_color());
  EXPECT_EQ(diverging_ramp(0.5), diverging_mid_color());
}

TEST(Heatmap, ConstantUnsignedRendersRampMidpoint) {
  const Image img = render_heatmap(ScalarGrid(2, 2, 3.0), HeatmapMode::kUnsigned);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) EXPECT_EQ(img.at(y, x), sequential_ramp(0.5));
}

TEST(Heatmap, UnsignedEndsOfRamp) {
  const Image img = render_heatmap(ScalarGrid(1, 2, {2.0, 5.0}), HeatmapMode::kUnsigned);
  EXPECT_EQ(img.at(0, 0), sequential_ramp(0.0));
  EXPECT_EQ(img.at(0, 1), sequential_ramp(1.0));
}

TEST(Heatmap, NonFiniteThrows) {
  EXPECT_THROW(render_heatmap(ScalarGrid(1, 2, {0.0, std::nan("")}), HeatmapMode::kSigned),
               ValidationError);
  EXPECT_THROW(render_heatmap(ScalarGrid(1, 1, {INFINITY}), HeatmapMode::kUnsigned),
               ValidationError);
}

TEST(Heatmap, OverlayAlphaEndpoints) {
  const ScalarGrid map(2, 2, {-1.0, 0.5, 0.0, 1.0});
  const Image image(2, 2, {0.2f, 0.4f, 0.6f});
  EXPECT_EQ(overlay(map, image, 0.0), image);
  EXPECT_EQ(overlay(map, image, 1.0), render_heatmap(map, HeatmapMode::kSigned));
}

TEST(Heatmap, OverlayHalfWhiteOverBlack) {
  // A zero signed map renders as the white mid color.
  ASSERT_EQ(diverging_mid_color(), (Rgb{1.f, 1.f, 1.f}));
  const Image blended = overlay(ScalarGrid(1, 1, 0.0), Image(1, 1), 0.5);
  EXPECT_EQ(blended.at(0, 0), (Rgb{0.5f, 0.5f, 0.5f}));
}

TEST(Heatmap, PanelLayout) {
  std::vector<ScalarGrid> ch{ScalarGrid(4, 5, 0.1), ScalarGrid(4, 5, -0.2)};
  std::vector<Rgb> colors{{1.f, 0.f, 0.f}, {0.f, 0.f, 1.f}};
  const Image panel = compose_color_panel(ch, colors, 8, 2);
  EXPECT_EQ(panel.height(), 8u + 2 + 4);
  EXPECT_EQ(panel.width(), 2u * 5 + 2);
  EXPECT_EQ(panel.at(0, 0), colors[0]);
  EXPECT_EQ(panel.at(0, 7), colors[1]);
  EXPECT_THROW(compose_color_panel(ch, std::span(colors).first(1)), ValidationError);
}
