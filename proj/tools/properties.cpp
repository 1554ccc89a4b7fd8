#include "properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "colorsal/error.hpp"
#include "colorsal/estimators.hpp"
#include "colorsal/image_io.hpp"
#include "colorsal/maskgen.hpp"
#include "colorsal/metrics.hpp"
#include "colorsal/oracle.hpp"
#include "colorsal/rng.hpp"
#include "colorsal/synthetic.hpp"

namespace colorsal::props {
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed, float lo = 0.f, float hi = 1.f) {
  Image img(h, w);
  SampleStream rng(seed, 0);
  for (float& v : img.data()) v = lo + (hi - lo) * static_cast<float>(rng.uniform());
  return img;
}

// Weights in [0,1] normalized to sum 1, so the score stays in [0,1].
SyntheticScorerSpec random_linear(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::vector<double> weights(h * w * 3);
  SampleStream rng(seed, 1);
  double total = 0.0;
  for (double& v : weights) total += (v = rng.uniform());
  for (double& v : weights) v /= total;
  return SyntheticScorerSpec::pixel_linear(h, w, std::move(weights));
}

RunConfig oracle_mode(std::size_t num_masks, std::uint64_t seed) {
  RunConfig cfg;
  cfg.num_masks = num_masks;
  cfg.p_mask = 0.5;
  cfg.cell_h = 2;
  cfg.cell_w = 2;
  cfg.seed = seed;
  cfg.interpolate = false;
  cfg.shift = false;
  cfg.batch_size = 256;
  return cfg;
}

// Compares an estimate with the exact cell values at the top-left pixel of
// every cell (all pixels of a cell share one mask value in oracle mode).
struct Deviation {
  double worst_ratio = 0.0;  // max |est - exact| / se
  double worst_abs = 0.0;
  bool degenerate = false;  // zero standard error somewhere
};

void compare_cells(const ScalarGrid& estimate, const ScalarGrid& se, const ScalarGrid& exact,
                   bool tamper, Deviation& dev) {
  for (std::size_t cy = 0; cy < exact.height(); ++cy) {
    for (std::size_t cx = 0; cx < exact.width(); ++cx) {
      const std::size_t y = cy * estimate.height() / exact.height();
      const std::size_t x = cx * estimate.width() / exact.width();
      double value = estimate(y, x);
      if (tamper) value = value * 1.05 + 0.02;
      const double err = std::abs(value - exact(cy, cx));
      if (!(se(y, x) > 0.0)) {
        dev.degenerate = true;
        continue;
      }
      dev.worst_ratio = std::max(dev.worst_ratio, err / se(y, x));
      dev.worst_abs = std::max(dev.worst_abs, err);
    }
  }
}

Result judge(const std::string& name, const Deviation& dev) {
  Result r;
  r.name = name;
  r.pass = !dev.degenerate && dev.worst_ratio <= 4.0;
  r.detail = fmt("max |MC - exact| = %.3g, max ratio to SE = %.2f (limit 4)", dev.worst_abs,
                 dev.worst_ratio);
  if (dev.degenerate) r.detail += ", zero standard error";
  return r;
}

double max_abs(const ScalarGrid& g) {
  double m = 0.0;
  for (double v : g.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const ScalarGrid& a, const ScalarGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const std::vector<std::string> kLabel{"target"};

std::string read_text(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

fs::path make_temp_dir(const std::string& tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const fs::path p = fs::temp_directory_path() /
                       ("colorsal-" + tag + "-" + std::to_string(rd()) + std::to_string(attempt));
    if (fs::create_directory(p)) return p;
  }
  throw Error("cannot create a temporary directory");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(make_temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

Result timed(const std::string& name, const std::function<Result()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  Result r;
  try {
    r = fn();
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Result oracle_rise(const Params& params) {
  const Image image = random_image(8, 8, params.seed);
  const auto scorer = make_synthetic_scorer(random_linear(8, 8, params.seed));
  const oracle::OracleConfig ocfg;
  const ScalarGrid exact = oracle::exact_rise(*scorer, image, kLabel[0], ocfg);
  EstimatorOptions opts;
  opts.workers = params.workers;
  opts.track_variance = true;
  const auto maps = rise_saliency(*scorer, image, kLabel, oracle_mode(params.num_masks, params.seed), opts);
  Deviation dev;
  compare_cells(maps[0].grid, *maps[0].std_error, exact, params.tamper, dev);
  return judge("oracle_rise", dev);
}

Result oracle_debiased(const Params& params) {
  const Image image = random_image(8, 8, params.seed + 1);
  const auto scorer = make_synthetic_scorer(random_linear(8, 8, params.seed + 1));
  const oracle::OracleConfig ocfg;
  const ScalarGrid exact = oracle::exact_debiased(*scorer, image, kLabel[0], ocfg);
  EstimatorOptions opts;
  opts.workers = params.workers;
  opts.track_variance = true;
  const auto maps =
      debiased_saliency(*scorer, image, kLabel, oracle_mode(params.num_masks, params.seed + 1), opts);
  Deviation dev;
  compare_cells(maps[0].grid, *maps[0].std_error, exact, params.tamper, dev);
  return judge("oracle_debiased", dev);
}

Result oracle_mcrise(const Params& params) {
  const Image image = random_image(8, 8, params.seed + 2);
  const auto scorer = make_synthetic_scorer(random_linear(8, 8, params.seed + 2));
  oracle::OracleConfig ocfg;
  ocfg.colors = {Rgb{1.f, 0.f, 0.f}, Rgb{0.f, 0.f, 1.f}};
  const auto exact = oracle::exact_mcrise(*scorer, image, kLabel[0], ocfg);
  RunConfig cfg = oracle_mode(params.num_masks, params.seed + 2);
  cfg.colors = ocfg.colors;
  EstimatorOptions opts;
  opts.workers = params.workers;
  opts.track_variance = true;
  const auto stacks = mcrise_saliency(*scorer, image, kLabel, cfg, opts);
  Deviation dev;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    compare_cells(stacks[0].channels[k], stacks[0].std_error[k], exact[k], params.tamper, dev);
  }
  return judge("oracle_mcrise", dev);
}

Result oracle_dual_forms() {
  const Image image = random_image(8, 8, 11);
  // Nonlinear in the mask so the two forms are not trivially identical.
  const auto scorer = make_synthetic_scorer(
      SyntheticScorerSpec::region_color(Rect{0, 0, 6, 5}, Rgb{1.f, 0.f, 0.f}, 0.6));
  oracle::OracleConfig ocfg;
  ocfg.cell_h = 3;
  ocfg.cell_w = 3;
  ocfg.p_mask = 0.3;
  const double d_bin = max_abs_diff(oracle::exact_debiased(*scorer, image, kLabel[0], ocfg),
                                    oracle::exact_debiased_conditional(*scorer, image, kLabel[0], ocfg));
  ocfg.cell_h = 2;
  ocfg.cell_w = 2;
  ocfg.colors = {Rgb{1.f, 0.f, 0.f}, Rgb{0.f, 1.f, 0.f}, Rgb{1.f, 1.f, 1.f}};
  const auto cond = oracle::exact_mcrise(*scorer, image, kLabel[0], ocfg);
  const auto weighted = oracle::exact_mcrise_weighted(*scorer, image, kLabel[0], ocfg);
  double d_col = 0.0;
  for (std::size_t k = 0; k < cond.size(); ++k) d_col = std::max(d_col, max_abs_diff(cond[k], weighted[k]));
  Result r;
  r.pass = d_bin <= 1e-12 && d_col <= 1e-12;
  r.detail = fmt("debiased forms differ by %.3g, color forms by %.3g (limit 1e-12)", d_bin, d_col);
  return r;
}

Result ignored_cells_vanish() {
  const Image image = random_image(8, 8, 5, 0.5f, 1.f);
  oracle::OracleConfig ocfg;
  ocfg.cell_h = 4;
  ocfg.cell_w = 4;
  // Cells (0,0) and (2,3) of the 4x4 grid, each a 2x2 pixel block.
  const std::vector<Rect> ignored{Rect{0, 0, 2, 2}, Rect{4, 6, 6, 8}};
  const auto scorer = make_synthetic_scorer(
      SyntheticScorerSpec::ignore_pixel(SyntheticScorerSpec::uniform_pixel_linear(8, 8), ignored));
  const ScalarGrid s = oracle::exact_debiased(*scorer, image, kLabel[0], ocfg);
  const double at_ignored = std::max(std::abs(s(0, 0)), std::abs(s(2, 3)));
  double elsewhere = 0.0;
  for (std::size_t cy = 0; cy < 4; ++cy) {
    for (std::size_t cx = 0; cx < 4; ++cx) {
      if ((cy == 0 && cx == 0) || (cy == 2 && cx == 3)) continue;
      elsewhere = std::max(elsewhere, std::abs(s(cy, cx)));
    }
  }
  Result r;
  r.pass = at_ignored <= 1e-12 && elsewhere > 0.01;
  r.detail = fmt("max |S| at ignored cells %.3g (limit 1e-12), max elsewhere %.3g (need > 0.01)",
                 at_ignored, elsewhere);
  return r;
}

Result constant_nullity() {
  const Image image = random_image(6, 6, 3);
  const auto scorer = make_synthetic_scorer(SyntheticScorerSpec::constant(0.7));
  oracle::OracleConfig ocfg;
  ocfg.cell_h = 3;
  ocfg.cell_w = 3;
  const double deb = max_abs(oracle::exact_debiased(*scorer, image, kLabel[0], ocfg));
  ocfg.cell_h = 2;
  ocfg.cell_w = 3;
  ocfg.colors = {Rgb{1.f, 0.f, 0.f}, Rgb{0.f, 1.f, 0.f}, Rgb{0.f, 0.f, 1.f}};
  double mc = 0.0;
  for (const auto& g : oracle::exact_mcrise(*scorer, image, kLabel[0], ocfg)) mc = std::max(mc, max_abs(g));
  Result r;
  r.pass = deb <= 1e-12 && mc <= 1e-12;
  r.detail = fmt("max |exact_debiased| %.3g, max |exact_mcrise| %.3g (limit 1e-12)", deb, mc);
  return r;
}

Result partition_of_unity(std::size_t samples, std::uint64_t seed) {
  RunConfig cfg;
  cfg.colors = default_palette();
  cfg.cell_h = 7;
  cfg.cell_w = 5;
  cfg.seed = seed;
  const MaskGenerator gen(cfg, 37, 53);
  double worst = 0.0;
  bool in_range = true;
  ColorMaskSample s;
  for (std::size_t n = 0; n < samples; ++n) {
    gen.color_into(n, s);
    for (std::size_t i = 0; i < s.nonmasked.size(); ++i) {
      double total = s.nonmasked[i];
      in_range = in_range && s.nonmasked[i] >= 0.0 && s.nonmasked[i] <= 1.0;
      for (const auto& ch : s.channels) {
        total += ch[i];
        in_range = in_range && ch[i] >= 0.0 && ch[i] <= 1.0;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  Result r;
  r.pass = worst <= 1e-9 && in_range;
  r.detail = fmt("%.0f samples, max |m0 + sum m_k - 1| = %.3g (limit 1e-9)", static_cast<double>(samples), worst);
  if (!in_range) r.detail += ", value outside [0,1]";
  return r;
}

Result linearity(std::size_t num_masks, std::uint64_t seed, int workers) {
  const std::size_t h = 16, w = 16;
  const Image image = random_image(h, w, seed);
  const auto m1 = SyntheticScorerSpec::region_color(Rect{2, 3, 9, 12}, Rgb{1.f, 0.f, 0.f}, 0.5);
  const auto m2 = random_linear(h, w, seed);
  const double a = 0.3, b = 0.6;
  const auto s1 = make_synthetic_scorer(m1);
  const auto s2 = make_synthetic_scorer(m2);
  const auto s12 = make_synthetic_scorer(SyntheticScorerSpec::weighted_sum({m1, m2}, {a, b}));

  RunConfig cfg;
  cfg.num_masks = num_masks;
  cfg.cell_h = 4;
  cfg.cell_w = 4;
  cfg.seed = seed;
  EstimatorOptions opts;
  opts.workers = workers;

  auto combine = [&](const ScalarGrid& g1, const ScalarGrid& g2, const ScalarGrid& g12) {
    double d = 0.0;
    for (std::size_t i = 0; i < g12.size(); ++i) d = std::max(d, std::abs(g12[i] - (a * g1[i] + b * g2[i])));
    return d;
  };
  const double d_rise = combine(rise_saliency(*s1, image, kLabel, cfg, opts)[0].grid,
                                rise_saliency(*s2, image, kLabel, cfg, opts)[0].grid,
                                rise_saliency(*s12, image, kLabel, cfg, opts)[0].grid);
  const double d_deb = combine(debiased_saliency(*s1, image, kLabel, cfg, opts)[0].grid,
                               debiased_saliency(*s2, image, kLabel, cfg, opts)[0].grid,
                               debiased_saliency(*s12, image, kLabel, cfg, opts)[0].grid);
  cfg.colors = default_palette();
  const auto c1 = mcrise_saliency(*s1, image, kLabel, cfg, opts)[0];
  const auto c2 = mcrise_saliency(*s2, image, kLabel, cfg, opts)[0];
  const auto c12 = mcrise_saliency(*s12, image, kLabel, cfg, opts)[0];
  double d_mc = 0.0;
  for (std::size_t k = 0; k < c12.channels.size(); ++k) {
    d_mc = std::max(d_mc, combine(c1.channels[k], c2.channels[k], c12.channels[k]));
  }
  Result r;
  r.pass = d_rise <= 1e-9 && d_deb <= 1e-9 && d_mc <= 1e-9;
  r.detail = fmt("max deviation rise %.3g, debiased %.3g", d_rise, d_deb) + fmt(", mcrise %.3g (limit 1e-9)", d_mc);
  return r;
}

Result debias_background(std::size_t num_masks, std::uint64_t seed, int workers) {
  // 16x16 image on a 4x4 cell grid; the scorer looks only at cell (1,1).
  const Rect region{4, 4, 8, 8};
  Image image = random_image(16, 16, seed);
  for (std::size_t y = region.row0; y < region.row1; ++y) {
    for (std::size_t x = region.col0; x < region.col1; ++x) image.set(y, x, {1.f, 0.f, 0.f});
  }
  const auto scorer =
      make_synthetic_scorer(SyntheticScorerSpec::region_color(region, Rgb{1.f, 0.f, 0.f}, 0.3));
  RunConfig cfg;
  cfg.num_masks = num_masks;
  cfg.cell_h = 4;
  cfg.cell_w = 4;
  cfg.seed = seed;
  cfg.interpolate = false;
  cfg.shift = false;
  cfg.batch_size = 256;
  EstimatorOptions opts;
  opts.workers = workers;
  const ScalarGrid deb = debiased_saliency(*scorer, image, kLabel, cfg, opts)[0].grid;
  const ScalarGrid rise = rise_saliency(*scorer, image, kLabel, cfg, opts)[0].grid;

  double deb_bg = 0.0, rise_bg = 0.0, deb_max = 0.0, rise_max = 0.0;
  std::size_t bg = 0;
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      deb_max = std::max(deb_max, std::abs(deb(y, x)));
      rise_max = std::max(rise_max, rise(y, x));
      if (region.contains(y, x)) continue;
      deb_bg += std::abs(deb(y, x));
      rise_bg += rise(y, x);
      ++bg;
    }
  }
  deb_bg /= static_cast<double>(bg);
  rise_bg /= static_cast<double>(bg);
  Result r;
  r.pass = deb_max > 0.0 && deb_bg <= 1e-2 * deb_max && rise_bg >= 0.25 * rise_max;
  r.detail = fmt("debiased bg mean |S| / max|S| = %.4f (limit 0.01); rise bg mean / max = %.3f (need >= 0.25)",
                 deb_bg / std::max(deb_max, 1e-300), rise_bg / std::max(rise_max, 1e-300));
  return r;
}

Result ca_deletion_direction(std::size_t num_masks, std::uint64_t seed, int workers) {
  // 32x32 image, red 16x16 square in the middle over random non-red clutter.
  const std::size_t n = 32;
  const Rect region{8, 8, 24, 24};
  Image image(n, n);
  SampleStream rng(seed, 7);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      if (region.contains(y, x)) {
        image.set(y, x, {1.f, 0.f, 0.f});
      } else {
        image.set(y, x, {0.3f * static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                         static_cast<float>(rng.uniform())});
      }
    }
  }
  const auto scorer =
      make_synthetic_scorer(SyntheticScorerSpec::region_color(region, Rgb{1.f, 0.f, 0.f}, 1.0));
  // 4x4 cells of 8x8 pixels: each cell moves the score enough to stand out
  // from the Monte-Carlo noise at a few thousand masks.
  RunConfig cfg;
  cfg.num_masks = num_masks;
  cfg.cell_h = 4;
  cfg.cell_w = 4;
  cfg.seed = seed;
  EstimatorOptions opts;
  opts.workers = workers;
  const ScalarGrid rise = rise_saliency(*scorer, image, kLabel, cfg, opts)[0].grid;
  cfg.colors = default_palette();
  const ColorSaliencyStack stack = mcrise_saliency(*scorer, image, kLabel, cfg, opts)[0];

  const auto ca = ca_deletion(*scorer, image, kLabel[0], stack, 100, 32, workers);
  const auto rise_order = order_by_saliency(rise);
  const auto del = deletion_curve(*scorer, image, kLabel[0], rise_order, PixelFill::black(), 100, 32, workers);
  const auto random = random_order(image.pixels(), seed);
  const auto rnd = deletion_curve(*scorer, image, kLabel[0], random, PixelFill::black(), 100, 32, workers);

  Result r;
  r.pass = ca.auc < del.auc - 0.05 && del.auc < rnd.auc - 0.05 && ca.auc < rnd.auc - 0.05;
  r.detail = fmt("AUC ca-deletion %.4f, rise deletion %.4f, random %.4f", ca.auc, del.auc, rnd.auc);
  return r;
}

Result explain_determinism(const std::string& method, std::size_t num_masks, std::uint64_t seed) {
  TempDir tmp("determinism");
  const fs::path image_path = tmp.path / "input.png";
  save_png(image_path, random_image(24, 20, seed));
  const std::string model =
      "synthetic:" +
      SyntheticScorerSpec::weighted_sum(
          {SyntheticScorerSpec::region_color(Rect{4, 4, 14, 12}, Rgb{1.f, 0.f, 0.f}, 0.5),
           SyntheticScorerSpec::uniform_pixel_linear(24, 20)},
          {0.5, 0.5})
          .to_json()
          .dump();

  auto run = [&](const std::string& dir, int workers) {
    std::ostringstream out, err;
    const std::vector<std::string> args{"explain", "--model", model, "--image", image_path.string(),
                                        "--labels", "a,b", "--method", method, "--num-masks",
                                        std::to_string(num_masks), "--cell-grid", "4x5", "--seed",
                                        std::to_string(seed), "--workers", std::to_string(workers),
                                        "--batch-size", "16", "--out-dir", (tmp.path / dir).string()};
    const int code = cli::run(args, out, err);
    if (code != 0) throw Error("explain exited with " + std::to_string(code) + ": " + err.str());
  };
  run("a", 1);
  run("b", 1);
  run("c", 8);

  std::size_t compared = 0;
  bool identical = true;
  double worst = 0.0;
  for (const auto& entry : fs::directory_iterator(tmp.path / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    const auto a = read_file_bytes(entry.path());
    const auto b = read_file_bytes(tmp.path / "b" / name);
    identical = identical && a == b;
    ++compared;
    if (entry.path().extension() == ".bin") {
      const auto ga = decode_grid_binary(a);
      const auto gc = decode_grid_binary(read_file_bytes(tmp.path / "c" / name));
      if (ga.size() != gc.size()) throw ValidationError("channel count differs across worker counts");
      for (std::size_t k = 0; k < ga.size(); ++k) worst = std::max(worst, max_abs_diff(ga[k], gc[k]));
    } else if (name.rfind("saliency_", 0) == 0 && entry.path().extension() == ".json") {
      const auto ga = stack_from_json(nlohmann::json::parse(read_text(entry.path())));
      const auto gc = stack_from_json(nlohmann::json::parse(read_text(tmp.path / "c" / name)));
      for (std::size_t k = 0; k < ga.size(); ++k) worst = std::max(worst, max_abs_diff(ga[k], gc[k]));
    }
  }
  Result r;
  r.pass = compared > 0 && identical && worst <= 1e-6;
  r.detail = std::to_string(compared) + " artifacts, " +
             (identical ? "byte-identical" : "DIFFER") + " across single-worker runs" +
             fmt(", max deviation with 8 workers %.3g (limit 1e-6)", worst);
  return r;
}

}  // namespace colorsal::props
