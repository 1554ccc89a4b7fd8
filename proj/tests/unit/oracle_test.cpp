#include <cmath>

#include <gtest/gtest.h>

#include "colorsal/error.hpp"
#include "colorsal/oracle.hpp"
#include "colorsal/synthetic.hpp"

using namespace colorsal;
using namespace colorsal::oracle;

namespace {

// Returns `hit` when pixel (0,0) equals `key`, `miss` otherwise.
class PixelKeyScorer : public ModelScorer {
 public:
  PixelKeyScorer(Rgb key, double hit, double miss) : key_(key), hit_(hit), miss_(miss) {}
  ScoreMatrix score_batch(std::span<const Image> images, std::span<const std::string> labels) const override {
    ScoreMatrix m(images.size(), labels.size());
    for (std::size_t i = 0; i < images.size(); ++i)
      for (std::size_t l = 0; l < labels.size(); ++l) m(i, l) = images[i].at(0, 0) == key_ ? hit_ : miss_;
    return m;
  }
  std::string identity() const override { return "pixel-key"; }

 private:
  Rgb key_;
  double hit_, miss_;
};

const Image kWhite(2, 2, {1.f, 1.f, 1.f});
const Rgb kRed{1.f, 0.f, 0.f};

OracleConfig grid(std::size_t h, std::size_t w, double p = 0.5) {
  OracleConfig c;
  c.cell_h = h;
  c.cell_w = w;
  c.p_mask = p;
  return c;
}

}  // namespace

TEST(Oracle, SingleCellBinary) {
  const PixelKeyScorer scorer({1.f, 1.f, 1.f}, 0.9, 0.1);
  EXPECT_NEAR(exact_rise(scorer, kWhite, "x", grid(1, 1))[0], 0.9, 1e-15);
  EXPECT_NEAR(exact_debiased(scorer, kWhite, "x", grid(1, 1))[0], 0.8, 1e-15);
  EXPECT_NEAR(exact_debiased_conditional(scorer, kWhite, "x", grid(1, 1))[0], 0.8, 1e-15);
}

TEST(Oracle, ConstantScorer) {
  const auto scorer = make_synthetic_scorer(SyntheticScorerSpec::constant(0.35));
  const Image img(4, 4, {0.3f, 0.6f, 0.9f});
  const ScalarGrid rise = exact_rise(*scorer, img, "x", grid(2, 2));
  for (double v : rise.data()) EXPECT_NEAR(v, 0.35, 1e-12);
  const ScalarGrid deb = exact_debiased(*scorer, img, "x", grid(2, 2, 0.3));
  for (double v : deb.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  OracleConfig c = grid(2, 2);
  c.colors = {kRed, {0.f, 1.f, 0.f}};
  for (const auto& ch : exact_mcrise(*scorer, img, "x", c))
    for (double v : ch.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Oracle, LinearScorerClosedForms) {
  // White 2x2 image, weight on the red channel only: M = sum w m exactly.
  const std::vector<double> w{0.1, 0.2, 0.3, 0.15};
  std::vector<double> weights(12, 0.0);
  for (int i = 0; i < 4; ++i) weights[i * 3] = w[i];
  const auto scorer = make_synthetic_scorer(SyntheticScorerSpec::pixel_linear(2, 2, weights));
  const double total = 0.75;
  for (double p : {0.5, 0.3}) {
    const ScalarGrid rise = exact_rise(*scorer, kWhite, "x", grid(2, 2, p));
    const ScalarGrid deb = exact_debiased(*scorer, kWhite, "x", grid(2, 2, p));
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(rise[i], w[i] + p * (total - w[i]), 1e-12) << "p=" << p << " cell " << i;
      EXPECT_NEAR(deb[i], w[i], 1e-12) << "p=" << p << " cell " << i;
    }
  }
}

TEST(Oracle, SingleColorTwoStates) {
  OracleConfig c = grid(1, 1);
  c.colors = {kRed};
  const PixelKeyScorer scorer(kRed, 0.7, 0.25);
  EXPECT_NEAR(exact_mcrise(scorer, kWhite, "x", c)[0][0], 0.7 - 0.25, 1e-15);
  EXPECT_NEAR(exact_mcrise_weighted(scorer, kWhite, "x", c)[0][0], 0.7 - 0.25, 1e-15);
}

TEST(Oracle, ColorSensitivityStaysOnItsChannel) {
  // 4x4 image, 2x2 cells: only red on cell (0,0) moves the score.
  OracleConfig c = grid(2, 2);
  c.colors = {kRed, {0.f, 1.f, 0.f}};
  const PixelKeyScorer scorer(kRed, 0.8, 0.2);
  const Image img(4, 4, {1.f, 1.f, 1.f});
  const auto s = exact_mcrise(scorer, img, "x", c);
  EXPECT_NEAR(s[0][0], 0.6, 1e-12);
  EXPECT_NEAR(s[1][0], 0.0, 1e-12);
  for (int i = 1; i < 4; ++i) {
    EXPECT_NEAR(s[0][i], 0.0, 1e-12);
    EXPECT_NEAR(s[1][i], 0.0, 1e-12);
  }
}

TEST(Oracle, DualFormsAgree) {
  const auto scorer = make_synthetic_scorer(
      SyntheticScorerSpec::region_color({0, 0, 3, 4}, kRed, 0.4));
  Image img(6, 6, {0.2f, 0.5f, 0.1f});
  OracleConfig c = grid(3, 3, 0.3);
  const auto a = exact_debiased(*scorer, img, "x", c);
  const auto b = exact_debiased_conditional(*scorer, img, "x", c);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);

  c = grid(2, 2, 0.4);
  c.colors = {kRed, {0.f, 0.f, 1.f}, {1.f, 1.f, 1.f}};
  c.workers = 3;
  const auto x = exact_mcrise(*scorer, img, "x", c);
  const auto y = exact_mcrise_weighted(*scorer, img, "x", c);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x[k][i], y[k][i], 1e-12);
}

TEST(Oracle, WorkersDoNotChangeResults) {
  const auto scorer = make_synthetic_scorer(SyntheticScorerSpec::uniform_pixel_linear(8, 8));
  Image img(8, 8, {0.4f, 0.8f, 0.2f});
  img.set(1, 1, {1.f, 0.f, 0.f});
  OracleConfig c = grid(3, 4);
  c.batch_size = 5;
  const auto one = exact_rise(*scorer, img, "x", c);
  c.workers = 4;
  const auto four = exact_rise(*scorer, img, "x", c);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(one[i], four[i], 1e-14);
}

TEST(Oracle, EnumerationBounds) {
  const auto scorer = make_synthetic_scorer(SyntheticScorerSpec::constant(0.5));
  const Image img(20, 20);
  EXPECT_THROW(exact_rise(*scorer, img, "x", grid(3, 6)), ConfigError);  // 18 cells
  EXPECT_NO_THROW(grid(4, 4).validate_binary());
  OracleConfig c = grid(3, 3);
  c.colors = {kRed, {0.f, 1.f, 0.f}, {0.f, 0.f, 1.f}, {1.f, 1.f, 1.f}, {0.f, 0.f, 0.f}};
  EXPECT_THROW(exact_mcrise(*scorer, img, "x", c), ConfigError);  // 6^9 states
  EXPECT_THROW(c.validate_color(), ConfigError);
  OracleConfig none = grid(2, 2);
  EXPECT_THROW(exact_mcrise(*scorer, img, "x", none), ConfigError);
  EXPECT_THROW(exact_rise(*scorer, Image(1, 1), "x", grid(2, 2)), ConfigError);
  EXPECT_THROW(exact_rise(*scorer, img, "x", grid(2, 2, 1.0)), ConfigError);
}

TEST(Oracle, PoolToCells) {
  ScalarGrid full(4, 6);
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = double(i);
  const ScalarGrid pooled = pool_to_cells(full, 2, 3);
  ASSERT_EQ(pooled.height(), 2u);
  ASSERT_EQ(pooled.width(), 3u);
  EXPECT_DOUBLE_EQ(pooled(0, 0), (0 + 1 + 6 + 7) / 4.0);
  EXPECT_DOUBLE_EQ(pooled(1, 2), (16 + 17 + 22 + 23) / 4.0);
  EXPECT_THROW(pool_to_cells(full, 5, 3), ConfigError);
}
