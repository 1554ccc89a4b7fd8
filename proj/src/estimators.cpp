#include "colorsal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "colorsal/error.hpp"
#include "colorsal/kernels.hpp"

namespace colorsal {
namespace {

// Rethrows `ep` as the same error category with `context` prepended.
[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& context) {
  try {
    std::rethrow_exception(ep);
  } catch (const TransportError& e) {
    throw TransportError(context + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context + ": " + e.what());
  }
}

// First exception raised inside an OpenMP region, by lowest work index.
class ErrorSlot {
 public:
  void capture(std::size_t index, std::exception_ptr ep) {
    std::lock_guard lock(mu_);
    if (!ep_ || index < index_) {
      ep_ = ep;
      index_ = index;
    }
  }
  void rethrow_if_set(const std::string& what) const {
    if (ep_) rethrow_with_context(ep_, what + " (sample " + std::to_string(index_) + ")");
  }

 private:
  std::mutex mu_;
  std::exception_ptr ep_;
  std::size_t index_ = 0;
};

void check_request(const Image& image, std::span<const std::string> labels, const RunConfig& cfg) {
  if (image.empty()) throw ConfigError("input image is empty");
  if (labels.empty()) throw ConfigError("at least one label is required");
  cfg.validate_for(image.height(), image.width());
}

// Scores `images` in batches of cfg.batch_size. Batches run concurrently when
// workers > 1; rows stay in sample order.
ScoreMatrix score_chunk(const ModelScorer& scorer, std::span<const Image> images,
                        std::span<const std::string> labels, std::size_t batch_size,
                        std::size_t first_sample, int workers) {
  ScoreMatrix out(images.size(), labels.size());
  const std::size_t batches = (images.size() + batch_size - 1) / batch_size;
  ErrorSlot errors;
#pragma omp parallel for num_threads(workers) schedule(dynamic) if (workers > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batches); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * batch_size;
    const std::size_t count = std::min(batch_size, images.size() - begin);
    try {
      const ScoreMatrix m = scorer.score_batch(images.subspan(begin, count), labels);
      check_scores(m, count, labels.size(), "scorer");
      std::copy(m.values.begin(), m.values.end(),
                out.values.begin() + static_cast<std::ptrdiff_t>(begin * labels.size()));
    } catch (...) {
      errors.capture(first_sample + begin, std::current_exception());
    }
  }
  errors.rethrow_if_set("scoring failed");
  return out;
}

struct ChunkPlan {
  std::size_t chunk;
  int workers;
};

ChunkPlan plan_chunks(const RunConfig& cfg, const EstimatorOptions& options) {
  const int workers = std::max(1, options.workers);
  return {cfg.batch_size * static_cast<std::size_t>(workers), workers};
}

ScalarGrid standard_error(std::span<const double> sum, std::span<const double> sumsq, std::size_t n,
                          std::size_t height, std::size_t width) {
  ScalarGrid se(height, width);
  if (n < 2) return se;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < se.size(); ++i) {
    const double mean = sum[i] / nn;
    const double var = std::max(0.0, (sumsq[i] - nn * mean * mean) / (nn - 1.0));
    se[i] = std::sqrt(var / nn);
  }
  return se;
}

std::vector<SaliencyMap> binary_estimator(const ModelScorer& scorer, const Image& image,
                                          std::span<const std::string> labels, const RunConfig& cfg,
                                          const EstimatorOptions& options, MapKind kind) {
  check_request(image, labels, cfg);
  const double p = cfg.p_mask;
  const kernels::BinaryWeight weight =
      kind == MapKind::kRise ? kernels::BinaryWeight{0.0, 1.0 / p}
                             : kernels::BinaryWeight{p, 1.0 / (p * (1.0 - p))};
  const MaskGenerator gen(cfg, image.height(), image.width());
  const std::size_t pixels = image.pixels();
  const ChunkPlan plan = plan_chunks(cfg, options);
  const std::size_t chunk = plan.chunk;
  const int workers = plan.workers;

  std::vector<double> acc(labels.size() * pixels, 0.0);
  std::vector<double> sumsq(options.track_variance ? acc.size() : 0, 0.0);
  std::vector<BinaryMaskSample> masks(std::min(chunk, cfg.num_masks));
  std::vector<Image> images(masks.size());
  std::vector<const double*> mask_ptrs(masks.size());

  for (std::size_t start = 0; start < cfg.num_masks; start += chunk) {
    const std::size_t count = std::min(chunk, cfg.num_masks - start);
    ErrorSlot errors;
#pragma omp parallel for num_threads(workers) schedule(static) if (workers > 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
      const auto j = static_cast<std::size_t>(i);
      try {
        gen.binary_into(start + j, masks[j]);
        images[j] = apply_binary_mask(image, masks[j]);
        mask_ptrs[j] = masks[j].mask.data().data();
      } catch (...) {
        errors.capture(start + j, std::current_exception());
      }
    }
    errors.rethrow_if_set("mask generation failed");

    const ScoreMatrix scores = score_chunk(scorer, std::span(images).first(count), labels,
                                           cfg.batch_size, start, workers);
    const std::span<const double* const> batch(mask_ptrs.data(), count);
    if (workers > 1) {
      kernels::accumulate_binary_omp(batch, pixels, scores, weight, acc, sumsq, workers);
    } else {
      kernels::accumulate_binary_serial(batch, pixels, scores, weight, acc, sumsq);
    }
    if (options.progress) options.progress(start + count, cfg.num_masks);
  }

  std::vector<SaliencyMap> out;
  const double n = static_cast<double>(cfg.num_masks);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    SaliencyMap map{ScalarGrid(image.height(), image.width()), labels[l], kind, cfg.num_masks, {}};
    for (std::size_t x = 0; x < pixels; ++x) map.grid[x] = acc[l * pixels + x] / n;
    if (options.track_variance) {
      map.std_error = standard_error(std::span(acc).subspan(l * pixels, pixels),
                                     std::span(sumsq).subspan(l * pixels, pixels), cfg.num_masks,
                                     image.height(), image.width());
    }
    out.push_back(std::move(map));
  }
  return out;
}

}  // namespace

std::vector<SaliencyMap> rise_saliency(const ModelScorer& scorer, const Image& image,
                                       std::span<const std::string> labels, const RunConfig& cfg,
                                       const EstimatorOptions& options) {
  return binary_estimator(scorer, image, labels, cfg, options, MapKind::kRise);
}

std::vector<SaliencyMap> debiased_saliency(const ModelScorer& scorer, const Image& image,
                                           std::span<const std::string> labels,
                                           const RunConfig& cfg, const EstimatorOptions& options) {
  return binary_estimator(scorer, image, labels, cfg, options, MapKind::kDebiased);
}

std::vector<ColorSaliencyStack> mcrise_saliency(const ModelScorer& scorer, const Image& image,
                                                std::span<const std::string> labels,
                                                const RunConfig& cfg,
                                                const EstimatorOptions& options) {
  check_request(image, labels, cfg);
  const std::size_t k = cfg.colors.size();
  if (k == 0) throw ConfigError("MC-RISE needs at least one masking color");
  const MaskGenerator gen(cfg, image.height(), image.width());
  const std::size_t pixels = image.pixels();
  const ChunkPlan plan = plan_chunks(cfg, options);
  const std::size_t chunk = plan.chunk;
  const int workers = plan.workers;

  std::vector<double> raw(labels.size() * k * pixels, 0.0);
  std::vector<double> base(labels.size() * pixels, 0.0);
  std::vector<double> sumsq(options.track_variance ? raw.size() : 0, 0.0);
  std::vector<ColorMaskSample> masks(std::min(chunk, cfg.num_masks));
  std::vector<Image> images(masks.size());
  std::vector<const double*> channel_ptrs(masks.size() * k);
  std::vector<const double*> nonmasked_ptrs(masks.size());

  for (std::size_t start = 0; start < cfg.num_masks; start += chunk) {
    const std::size_t count = std::min(chunk, cfg.num_masks - start);
    ErrorSlot errors;
#pragma omp parallel for num_threads(workers) schedule(static) if (workers > 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
      const auto j = static_cast<std::size_t>(i);
      try {
        gen.color_into(start + j, masks[j]);
        images[j] = apply_color_mask(image, masks[j], cfg.colors);
        for (std::size_t c = 0; c < k; ++c) channel_ptrs[j * k + c] = masks[j].channels[c].data().data();
        nonmasked_ptrs[j] = masks[j].nonmasked.data().data();
      } catch (...) {
        errors.capture(start + j, std::current_exception());
      }
    }
    errors.rethrow_if_set("mask generation failed");

    const ScoreMatrix scores = score_chunk(scorer, std::span(images).first(count), labels,
                                           cfg.batch_size, start, workers);
    const kernels::ColorBatch batch{std::span<const double* const>(channel_ptrs.data(), count * k),
                                    std::span<const double* const>(nonmasked_ptrs.data(), count), k,
                                    pixels};
    if (workers > 1) {
      kernels::accumulate_color_omp(batch, scores, cfg.p_mask, raw, base, sumsq, workers);
    } else {
      kernels::accumulate_color_serial(batch, scores, cfg.p_mask, raw, base, sumsq);
    }
    if (options.progress) options.progress(start + count, cfg.num_masks);
  }

  std::vector<ColorSaliencyStack> out;
  const double n = static_cast<double>(cfg.num_masks);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    ColorSaliencyStack stack;
    stack.label = labels[l];
    stack.colors = cfg.colors;
    stack.n_samples = cfg.num_masks;
    for (std::size_t c = 0; c < k; ++c) {
      ScalarGrid g(image.height(), image.width());
      const double* r = raw.data() + (l * k + c) * pixels;
      const double* b = base.data() + l * pixels;
      for (std::size_t x = 0; x < pixels; ++x) g[x] = (r[x] - b[x]) / n;
      if (options.track_variance) {
        std::vector<double> diff(pixels);
        for (std::size_t x = 0; x < pixels; ++x) diff[x] = r[x] - b[x];
        stack.std_error.push_back(standard_error(
            diff, std::span(sumsq).subspan((l * k + c) * pixels, pixels), cfg.num_masks,
            image.height(), image.width()));
      }
      stack.channels.push_back(std::move(g));
    }
    out.push_back(std::move(stack));
  }
  return out;
}

// ---- response classes -----------------------------------------------------------

double default_epsilon(const ColorSaliencyStack& stack) {
  double peak = 0.0;
  for (const auto& ch : stack.channels) {
    for (double v : ch.data()) peak = std::max(peak, std::abs(v));
  }
  const double eps = 0.1 * peak;
  return eps > 0.0 ? eps : std::numeric_limits<double>::denorm_min();
}

ResponseClassGrid classify_color_response(const ColorSaliencyStack& stack,
                                          std::optional<double> epsilon) {
  if (stack.channels.empty()) throw ValidationError("classify_color_response: empty stack");
  for (const auto& ch : stack.channels) {
    if (!ch.same_shape(stack.channels.front())) throw ValidationError("classify_color_response: ragged stack");
    for (double v : ch.data()) {
      if (!std::isfinite(v)) throw ValidationError("classify_color_response: non-finite saliency");
    }
  }
  const double eps = epsilon ? *epsilon : default_epsilon(stack);
  if (!(eps > 0.0)) throw ConfigError("classify_color_response: epsilon must be positive");

  ResponseClassGrid out;
  out.height = stack.channels.front().height();
  out.width = stack.channels.front().width();
  out.epsilon = eps;
  out.pixels.resize(out.height * out.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    bool all_pos = true, all_neg = true, all_flat = true;
    std::vector<ColorTag> tags;
    for (const auto& ch : stack.channels) {
      const double v = ch[i];
      all_pos = all_pos && v > eps;
      all_neg = all_neg && v < -eps;
      all_flat = all_flat && std::abs(v) <= eps;
      tags.push_back(v > eps ? ColorTag::kMissingColor
                             : (v < -eps ? ColorTag::kColorFeature : ColorTag::kColorMatch));
    }
    auto& px = out.pixels[i];
    if (all_pos) {
      px.category = ResponseCategory::kTextureObstacle;
    } else if (all_neg) {
      px.category = ResponseCategory::kTextureFeature;
    } else if (all_flat) {
      px.category = ResponseCategory::kIrrelevant;
    } else {
      px.category = ResponseCategory::kPerColor;
      px.tags = std::move(tags);
    }
  }
  return out;
}

std::string describe(const PixelResponse& response) {
  switch (response.category) {
    case ResponseCategory::kTextureObstacle: return "texture_obstacle";
    case ResponseCategory::kTextureFeature: return "texture_feature";
    case ResponseCategory::kIrrelevant: return "irrelevant";
    case ResponseCategory::kPerColor: break;
  }
  std::string out;
  for (std::size_t k = 0; k < response.tags.size(); ++k) {
    if (!out.empty()) out += ',';
    switch (response.tags[k]) {
      case ColorTag::kMissingColor: out += "missing_color:"; break;
      case ColorTag::kColorFeature: out += "color_feature:"; break;
      case ColorTag::kColorMatch: out += "color_match:"; break;
    }
    out += std::to_string(k + 1);
  }
  return out;
}

}  // namespace colorsal
