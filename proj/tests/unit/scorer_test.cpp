#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "colorsal/error.hpp"
#include "colorsal/scorer.hpp"
#include "colorsal/synthetic.hpp"

using namespace colorsal;

namespace {

const std::vector<std::string> kLabel{"x"};

double score_one(const ModelScorer& s, const Image& img) {
  const Image batch[1] = {img};
  return s.score_batch(batch, kLabel)(0, 0);
}

Image noise_image(std::size_t h, std::size_t w, unsigned salt) {
  Image img(h, w);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    img.data()[i] = float((i * 2654435761u + salt) % 1000) / 999.f;
  }
  return img;
}

}  // namespace

TEST(Synthetic, ConstantScoresEverything) {
  const auto s = make_synthetic_scorer(SyntheticScorerSpec::constant(0.7));
  const std::vector<Image> batch{Image(2, 2), noise_image(5, 3, 1)};
  const std::vector<std::string> labels{"a", "b", "c"};
  const ScoreMatrix m = s->score_batch(batch, labels);
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.cols, 3u);
  for (double v : m.values) EXPECT_EQ(v, 0.7);
}

TEST(Synthetic, LinearWeightsSummingToOneOnWhite) {
  const std::size_t h = 3, w = 4;
  std::vector<double> weights(h * w * 3);
  double total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += (weights[i] = double(i + 1));
  for (double& v : weights) v /= total;
  const auto s = make_synthetic_scorer(SyntheticScorerSpec::pixel_linear(h, w, weights));
  EXPECT_NEAR(score_one(*s, Image(h, w, {1.f, 1.f, 1.f})), 1.0, 1e-12);
  const auto u = make_synthetic_scorer(SyntheticScorerSpec::uniform_pixel_linear(h, w));
  EXPECT_EQ(score_one(*u, Image(h, w, {1.f, 1.f, 1.f})), 1.0);
  EXPECT_THROW(score_one(*u, Image(h + 1, w)), ValidationError);
}

TEST(Synthetic, LinearClampsToUnitInterval) {
  auto spec = SyntheticScorerSpec::uniform_pixel_linear(2, 2);
  spec.bias = 0.5;
  EXPECT_EQ(score_one(*make_synthetic_scorer(spec), Image(2, 2, {1.f, 1.f, 1.f})), 1.0);
  spec.bias = -2.0;
  EXPECT_EQ(score_one(*make_synthetic_scorer(spec), Image(2, 2, {1.f, 1.f, 1.f})), 0.0);
}

TEST(Synthetic, RegionColorPeaksOnTarget) {
  const Rect region{1, 1, 3, 4};
  const auto s = make_synthetic_scorer(SyntheticScorerSpec::region_color(region, {1.f, 0.f, 0.f}, 0.3));
  Image img = noise_image(5, 5, 7);
  for (std::size_t y = 1; y < 3; ++y)
    for (std::size_t x = 1; x < 4; ++x) img.set(y, x, {1.f, 0.f, 0.f});
  EXPECT_EQ(score_one(*s, img), 1.0);
  img.set(2, 2, {0.f, 0.f, 1.f});
  EXPECT_LT(score_one(*s, img), 1.0);
  EXPECT_THROW(score_one(*s, Image(2, 2)), ValidationError);
}

TEST(Synthetic, IgnorePixelMatchesZeroedWeights) {
  const std::size_t h = 4, w = 5;
  std::vector<double> weights(h * w * 3);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = double(i % 11) / 400.0;
  const std::vector<Rect> ignored{{0, 0, 2, 2}, {3, 4, 4, 5}};
  const auto ignoring = make_synthetic_scorer(
      SyntheticScorerSpec::ignore_pixel(SyntheticScorerSpec::pixel_linear(h, w, weights), ignored));
  std::vector<double> zeroed = weights;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (const auto& r : ignored)
        if (r.contains(y, x))
          for (int c = 0; c < 3; ++c) zeroed[(y * w + x) * 3 + c] = 0.0;
  const auto reference = make_synthetic_scorer(SyntheticScorerSpec::pixel_linear(h, w, zeroed));
  for (unsigned salt = 0; salt < 5; ++salt) {
    const Image img = noise_image(h, w, salt);
    EXPECT_NEAR(score_one(*ignoring, img), score_one(*reference, img), 1e-15);
    Image changed = img;
    changed.set(0, 1, {0.f, 1.f, 0.f});
    changed.set(3, 4, {1.f, 1.f, 1.f});
    EXPECT_EQ(score_one(*ignoring, img), score_one(*ignoring, changed));
  }
}

TEST(Synthetic, WeightedSumCombinesChildren) {
  const auto spec = SyntheticScorerSpec::weighted_sum(
      {SyntheticScorerSpec::constant(0.5), SyntheticScorerSpec::uniform_pixel_linear(2, 2)}, {0.4, 0.5});
  const auto s = make_synthetic_scorer(spec);
  EXPECT_NEAR(score_one(*s, Image(2, 2, {1.f, 1.f, 1.f})), 0.7, 1e-15);
  EXPECT_NEAR(score_one(*s, Image(2, 2)), 0.2, 1e-15);
}

TEST(Synthetic, PureOverManyCalls) {
  const auto s = make_synthetic_scorer(
      SyntheticScorerSpec::region_color({0, 0, 3, 3}, {0.2f, 0.7f, 0.1f}, 0.5));
  const Image img = noise_image(4, 4, 3);
  const double first = score_one(*s, img);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(score_one(*s, img), first);
}

TEST(Synthetic, LabelFiltering) {
  auto spec = SyntheticScorerSpec::constant(0.3);
  spec.labels = {"cat", "dog"};
  const auto s = make_synthetic_scorer(spec);
  const std::vector<Image> batch{Image(1, 1)};
  const std::vector<std::string> ok{"dog"}, bad{"cat", "fish"};
  EXPECT_EQ(s->score_batch(batch, ok)(0, 0), 0.3);
  EXPECT_THROW(s->score_batch(batch, bad), ConfigError);
  EXPECT_THROW(s->score_batch(std::span<const Image>{}, ok), ValidationError);
}

TEST(Synthetic, SpecValidation) {
  EXPECT_THROW(SyntheticScorerSpec::constant(1.2).validate(), ConfigError);
  EXPECT_THROW(SyntheticScorerSpec::pixel_linear(2, 2, {1.0}).validate(), ConfigError);
  EXPECT_THROW(SyntheticScorerSpec::region_color({1, 1, 1, 3}, {1.f, 0.f, 0.f}, 0.2).validate(), ConfigError);
  EXPECT_THROW(SyntheticScorerSpec::region_color({0, 0, 1, 1}, {1.f, 0.f, 0.f}, 0.0).validate(), ConfigError);
  EXPECT_THROW(SyntheticScorerSpec::weighted_sum({SyntheticScorerSpec::constant(0.1)}, {1.0, 2.0}).validate(),
               ConfigError);
  EXPECT_THROW(make_synthetic_scorer(SyntheticScorerSpec::constant(-0.1)), ConfigError);
}

TEST(Synthetic, JsonRoundTrip) {
  auto inner = SyntheticScorerSpec::ignore_pixel(
      SyntheticScorerSpec::pixel_linear(1, 2, {0.1, 0.2, 0.3, 0.0, 0.1, 0.2}, 0.05), {{0, 0, 1, 1}});
  auto spec = SyntheticScorerSpec::weighted_sum(
      {inner, SyntheticScorerSpec::region_color({0, 0, 1, 2}, {0.f, 0.f, 1.f}, 0.3)}, {0.25, 0.75});
  spec.labels = {"a", "b"};
  const auto j = spec.to_json();
  EXPECT_EQ(j["kind"], "weighted_sum");
  const auto back = SyntheticScorerSpec::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  const std::vector<Image> batch{noise_image(1, 2, 9)};
  const std::vector<std::string> label{"b"};
  EXPECT_EQ(make_synthetic_scorer(spec)->score_batch(batch, label).values,
            make_synthetic_scorer(back)->score_batch(batch, label).values);
}

TEST(Synthetic, ParseForms) {
  EXPECT_EQ(parse_synthetic_spec("constant:0.25").value, 0.25);
  EXPECT_THROW(parse_synthetic_spec("constant:abc"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec("constant:0.5x"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec("constant:2"), ConfigError);

  const auto uniform = parse_synthetic_spec(R"({"kind":"pixel_linear","height":2,"width":3,"uniform":true})");
  EXPECT_EQ(uniform.weights.size(), 18u);
  EXPECT_DOUBLE_EQ(uniform.weights[0], 1.0 / 18.0);

  const auto path = std::filesystem::temp_directory_path() / "colorsal_spec.json";
  std::ofstream(path) << R"({"kind":"region_color","region":[0,0,2,2],"target":[1,0,0],"bandwidth":0.5})";
  EXPECT_EQ(parse_synthetic_spec("@" + path.string()).kind, SyntheticScorerSpec::Kind::kRegionColor);
  EXPECT_THROW(parse_synthetic_spec("@/nonexistent/spec.json"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec("{not json"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec(R"({"kind":"mystery"})"), ConfigError);
  EXPECT_THROW(parse_synthetic_spec(R"({"kind":"constant"})"), ConfigError);
  EXPECT_EQ(kind_name(SyntheticScorerSpec::Kind::kIgnorePixel), "ignore_pixel");
}

TEST(Reid, ConfidenceFromDistance) {
  EXPECT_EQ(reid_confidence(0.0, 2.0), 1.0);
  EXPECT_NEAR(reid_confidence(2.0, 2.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(reid_confidence(2.0, 2.0), 0.3679, 1e-4);
  EXPECT_LT(reid_confidence(100.0, 2.0), 1e-20);
  EXPECT_THROW(reid_confidence(1.0, 0.0), ConfigError);
  EXPECT_THROW(reid_confidence(-1.0, 1.0), ConfigError);
}

TEST(CheckScores, ShapeAndRange) {
  ScoreMatrix m(2, 2);
  m.values = {0.0, 1.0, 0.5, 0.25};
  EXPECT_NO_THROW(check_scores(m, 2, 2, "test"));
  EXPECT_THROW(check_scores(m, 2, 3, "test"), ValidationError);
  m.values[1] = 1.0000001;
  EXPECT_THROW(check_scores(m, 2, 2, "test"), ValidationError);
  m.values[1] = std::nan("");
  EXPECT_THROW(check_scores(m, 2, 2, "test"), ValidationError);
}
