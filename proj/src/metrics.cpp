#include "colorsal/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "colorsal/error.hpp"
#include "colorsal/rng.hpp"

namespace colorsal {

double auc(const DeletionCurve& curve) {
  const auto& f = curve.fractions;
  const auto& c = curve.confidences;
  if (f.size() < 2 || f.size() != c.size()) {
    throw ValidationError("auc: need at least two (fraction, confidence) points");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (!(f[i] > f[i - 1])) throw ValidationError("auc: fractions must be strictly increasing");
    area += 0.5 * (c[i] + c[i - 1]) * (f[i] - f[i - 1]);
  }
  return area;
}

DeletionCurve deletion_curve(const ModelScorer& scorer, const Image& image, const std::string& label,
                             std::span<const std::size_t> order, const PixelFill& fill,
                             std::size_t steps, std::size_t batch_size, int workers) {
  const std::size_t total = image.pixels();
  if (total == 0) throw ConfigError("deletion_curve: empty image");
  if (steps == 0) throw ConfigError("deletion_curve: steps must be at least 1");
  if (batch_size == 0) throw ConfigError("deletion_curve: batch_size must be positive");
  if (order.size() != total) throw ValidationError("deletion_curve: order must rank every pixel");
  {
    std::vector<bool> seen(total, false);
    for (std::size_t p : order) {
      if (p >= total || seen[p]) throw ValidationError("deletion_curve: order is not a permutation");
      seen[p] = true;
    }
  }
  if (!fill.per_pixel.empty() && fill.per_pixel.size() != total) {
    throw ValidationError("deletion_curve: per-pixel fill must cover every pixel");
  }
  steps = std::min(steps, total);

  // Image j has the first floor(j * total / steps) ranked pixels removed.
  std::vector<std::size_t> removed(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) removed[j] = j * total / steps;

  std::vector<Image> chain(steps + 1);
  chain[0] = image;
  for (std::size_t j = 1; j <= steps; ++j) {
    chain[j] = chain[j - 1];
    for (std::size_t r = removed[j - 1]; r < removed[j]; ++r) {
      const std::size_t p = order[r];
      const Rgb& color = fill.per_pixel.empty() ? fill.constant : fill.per_pixel[p];
      float* px = chain[j].pixel(p);
      px[0] = color[0];
      px[1] = color[1];
      px[2] = color[2];
    }
  }

  DeletionCurve curve;
  curve.fractions.resize(steps + 1);
  curve.confidences.resize(steps + 1);
  const std::vector<std::string> labels{label};
  const std::size_t batches = (chain.size() + batch_size - 1) / batch_size;
  std::exception_ptr failure;
#pragma omp parallel for num_threads(std::max(1, workers)) schedule(dynamic) if (workers > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batches); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * batch_size;
    const std::size_t count = std::min(batch_size, chain.size() - begin);
    try {
      const ScoreMatrix m = scorer.score_batch(std::span(chain).subspan(begin, count), labels);
      check_scores(m, count, 1, "scorer");
      for (std::size_t i = 0; i < count; ++i) curve.confidences[begin + i] = m(i, 0);
    } catch (...) {
#pragma omp critical(deletion_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t j = 0; j <= steps; ++j) {
    curve.fractions[j] = static_cast<double>(removed[j]) / static_cast<double>(total);
  }
  curve.auc = auc(curve);
  return curve;
}

std::vector<std::size_t> order_by_saliency(const ScalarGrid& map) {
  std::vector<std::size_t> order(map.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return map[a] > map[b]; });
  return order;
}

namespace {

std::vector<double> min_over_colors(const ColorSaliencyStack& stack) {
  if (stack.channels.empty()) throw ValidationError("color stack has no channels");
  std::vector<double> mins(stack.channels.front().size());
  for (std::size_t i = 0; i < mins.size(); ++i) {
    double m = stack.channels.front()[i];
    for (const auto& ch : stack.channels) m = std::min(m, ch[i]);
    mins[i] = m;
  }
  return mins;
}

}  // namespace

std::vector<std::size_t> order_by_min_color(const ColorSaliencyStack& stack) {
  const auto mins = min_over_colors(stack);
  std::vector<std::size_t> order(mins.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mins[a] < mins[b]; });
  return order;
}

std::vector<std::size_t> argmin_colors(const ColorSaliencyStack& stack) {
  if (stack.channels.empty()) throw ValidationError("color stack has no channels");
  std::vector<std::size_t> arg(stack.channels.front().size(), 0);
  for (std::size_t i = 0; i < arg.size(); ++i) {
    for (std::size_t k = 1; k < stack.channels.size(); ++k) {
      if (stack.channels[k][i] < stack.channels[arg[i]][i]) arg[i] = k;
    }
  }
  return arg;
}

std::vector<std::size_t> random_order(std::size_t pixels, std::uint64_t seed) {
  std::vector<std::size_t> order(pixels);
  std::iota(order.begin(), order.end(), 0);
  SampleStream rng(seed, 0);
  for (std::size_t i = pixels; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

DeletionCurve ca_deletion(const ModelScorer& scorer, const Image& image, const std::string& label,
                          const ColorSaliencyStack& stack, std::size_t steps, std::size_t batch_size,
                          int workers) {
  if (stack.channels.empty() || stack.colors.size() != stack.channels.size()) {
    throw ValidationError("ca_deletion: stack needs one color per channel");
  }
  for (const auto& ch : stack.channels) {
    if (ch.height() != image.height() || ch.width() != image.width()) {
      throw ValidationError("ca_deletion: stack and image dimensions differ");
    }
  }
  const auto order = order_by_min_color(stack);
  const auto arg = argmin_colors(stack);
  PixelFill fill;
  fill.per_pixel.resize(arg.size());
  for (std::size_t i = 0; i < arg.size(); ++i) fill.per_pixel[i] = stack.colors[arg[i]];
  return deletion_curve(scorer, image, label, order, fill, steps, batch_size, workers);
}

std::string curve_to_csv(const DeletionCurve& curve) {
  std::string out = "fraction,confidence\n";
  char line[96];
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", curve.fractions[i], curve.confidences[i]);
    out += line;
  }
  return out;
}

nlohmann::json curve_to_json(const DeletionCurve& curve) {
  return {{"fractions", curve.fractions}, {"confidences", curve.confidences}, {"auc", curve.auc}};
}

}  // namespace colorsal
