#include "colorsal/oracle.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#include "colorsal/error.hpp"

namespace colorsal::oracle {
namespace {

struct Enumeration {
  std::size_t base = 2;   // states per cell
  std::size_t cells = 0;  // h * w
  std::size_t count = 0;  // base^cells

  std::vector<std::uint8_t> states(std::size_t index) const {
    std::vector<std::uint8_t> s(cells);
    for (std::size_t c = cells; c-- > 0;) {
      s[c] = static_cast<std::uint8_t>(index % base);
      index /= base;
    }
    return s;
  }
};

Enumeration make_enumeration(std::size_t base, std::size_t cells) {
  Enumeration e{base, cells, 1};
  for (std::size_t c = 0; c < cells; ++c) e.count *= base;
  return e;
}

void check_image(const Image& image, const OracleConfig& cfg) {
  if (image.empty()) throw ConfigError("oracle: empty image");
  if (cfg.cell_h == 0 || cfg.cell_w == 0 || cfg.cell_h > image.height() || cfg.cell_w > image.width()) {
    throw ConfigError("oracle: cell grid must be non-empty and no finer than the image");
  }
}

// Image for one assignment: binary (state 1 keeps, 0 blacks out) or color
// (state 0 keeps, k fills with colors[k-1]).
Image render(const Image& image, const std::vector<std::uint8_t>& states, const OracleConfig& cfg,
             bool color_mode) {
  Image out = image;
  const std::size_t h = image.height(), w = image.width();
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t cy = std::min(y * cfg.cell_h / h, cfg.cell_h - 1);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t cx = std::min(x * cfg.cell_w / w, cfg.cell_w - 1);
      const std::uint8_t s = states[cy * cfg.cell_w + cx];
      if (color_mode) {
        if (s != 0) out.set(y, x, cfg.colors[s - 1]);
      } else if (s == 0) {
        out.set(y, x, {0.f, 0.f, 0.f});
      }
    }
  }
  return out;
}

std::vector<double> score_all(const ModelScorer& scorer, const Image& image, const std::string& label,
                              const OracleConfig& cfg, const Enumeration& e, bool color_mode) {
  std::vector<double> scores(e.count);
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
  const std::size_t batches = (e.count + batch - 1) / batch;
  const std::vector<std::string> labels{label};
  std::mutex mu;
  std::exception_ptr failure;
  const int workers = std::max(1, cfg.workers);
#pragma omp parallel for num_threads(workers) schedule(dynamic) if (workers > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batches); ++b) {
    try {
      const std::size_t begin = static_cast<std::size_t>(b) * batch;
      const std::size_t end = std::min(e.count, begin + batch);
      std::vector<Image> images;
      images.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) images.push_back(render(image, e.states(i), cfg, color_mode));
      const ScoreMatrix m = scorer.score_batch(images, labels);
      check_scores(m, images.size(), 1, "oracle scorer");
      std::copy(m.values.begin(), m.values.end(), scores.begin() + static_cast<std::ptrdiff_t>(begin));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return scores;
}

double probability(const std::vector<std::uint8_t>& states, const OracleConfig& cfg, bool color_mode,
                   std::size_t skip_cell = static_cast<std::size_t>(-1)) {
  const double p = cfg.p_mask;
  const double per_color = color_mode ? p / static_cast<double>(cfg.colors.size()) : 0.0;
  double prob = 1.0;
  for (std::size_t c = 0; c < states.size(); ++c) {
    if (c == skip_cell) continue;
    if (color_mode) {
      prob *= states[c] == 0 ? 1.0 - p : per_color;
    } else {
      prob *= states[c] == 1 ? p : 1.0 - p;
    }
  }
  return prob;
}

}  // namespace

void OracleConfig::validate_binary() const {
  if (!(p_mask > 0.0 && p_mask < 1.0)) throw ConfigError("oracle: p_mask must lie in (0,1)");
  if (cell_h * cell_w > kMaxBinaryCells) {
    throw ConfigError("oracle: binary enumeration limited to 16 cells");
  }
}

void OracleConfig::validate_color() const {
  if (!(p_mask > 0.0 && p_mask < 1.0)) throw ConfigError("oracle: p_mask must lie in (0,1)");
  if (colors.empty()) throw ConfigError("oracle: color mode needs at least one color");
  std::size_t states = 1;
  for (std::size_t c = 0; c < cell_h * cell_w; ++c) {
    states *= colors.size() + 1;
    if (states > kMaxColorStates) throw ConfigError("oracle: color enumeration limited to 2^20 states");
  }
}

ScalarGrid exact_rise(const ModelScorer& scorer, const Image& image, const std::string& label,
                      const OracleConfig& cfg) {
  cfg.validate_binary();
  check_image(image, cfg);
  const auto e = make_enumeration(2, cfg.cell_h * cfg.cell_w);
  const auto scores = score_all(scorer, image, label, cfg, e, false);
  ScalarGrid out(cfg.cell_h, cfg.cell_w);
  for (std::size_t i = 0; i < e.count; ++i) {
    const auto s = e.states(i);
    const double weighted = scores[i] * probability(s, cfg, false);
    for (std::size_t c = 0; c < e.cells; ++c) {
      if (s[c] == 1) out[c] += weighted;
    }
  }
  for (std::size_t c = 0; c < e.cells; ++c) out[c] /= cfg.p_mask;
  return out;
}

ScalarGrid exact_debiased(const ModelScorer& scorer, const Image& image, const std::string& label,
                          const OracleConfig& cfg) {
  cfg.validate_binary();
  check_image(image, cfg);
  const auto e = make_enumeration(2, cfg.cell_h * cfg.cell_w);
  const auto scores = score_all(scorer, image, label, cfg, e, false);
  const double p = cfg.p_mask;
  const double norm = p * (1.0 - p);
  ScalarGrid out(cfg.cell_h, cfg.cell_w);
  for (std::size_t i = 0; i < e.count; ++i) {
    const auto s = e.states(i);
    const double weighted = scores[i] * probability(s, cfg, false);
    for (std::size_t c = 0; c < e.cells; ++c) out[c] += (s[c] - p) / norm * weighted;
  }
  return out;
}

ScalarGrid exact_debiased_conditional(const ModelScorer& scorer, const Image& image,
                                      const std::string& label, const OracleConfig& cfg) {
  cfg.validate_binary();
  check_image(image, cfg);
  const auto e = make_enumeration(2, cfg.cell_h * cfg.cell_w);
  const auto scores = score_all(scorer, image, label, cfg, e, false);
  ScalarGrid kept(cfg.cell_h, cfg.cell_w);
  ScalarGrid dropped(cfg.cell_h, cfg.cell_w);
  for (std::size_t c = 0; c < e.cells; ++c) {
    for (std::size_t i = 0; i < e.count; ++i) {
      const auto s = e.states(i);
      const double conditional = probability(s, cfg, false, c);
      (s[c] == 1 ? kept : dropped)[c] += scores[i] * conditional;
    }
  }
  ScalarGrid out(cfg.cell_h, cfg.cell_w);
  for (std::size_t c = 0; c < e.cells; ++c) out[c] = kept[c] - dropped[c];
  return out;
}

std::vector<ScalarGrid> exact_mcrise(const ModelScorer& scorer, const Image& image,
                                     const std::string& label, const OracleConfig& cfg) {
  cfg.validate_color();
  check_image(image, cfg);
  const std::size_t k = cfg.colors.size();
  const auto e = make_enumeration(k + 1, cfg.cell_h * cfg.cell_w);
  const auto scores = score_all(scorer, image, label, cfg, e, true);
  // cond[state][cell] = E[M | cell in state]
  std::vector<ScalarGrid> cond(k + 1, ScalarGrid(cfg.cell_h, cfg.cell_w));
  for (std::size_t c = 0; c < e.cells; ++c) {
    for (std::size_t i = 0; i < e.count; ++i) {
      const auto s = e.states(i);
      cond[s[c]][c] += scores[i] * probability(s, cfg, true, c);
    }
  }
  std::vector<ScalarGrid> out;
  for (std::size_t j = 1; j <= k; ++j) {
    ScalarGrid g(cfg.cell_h, cfg.cell_w);
    for (std::size_t c = 0; c < e.cells; ++c) g[c] = cond[j][c] - cond[0][c];
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<ScalarGrid> exact_mcrise_weighted(const ModelScorer& scorer, const Image& image,
                                              const std::string& label, const OracleConfig& cfg) {
  cfg.validate_color();
  check_image(image, cfg);
  const std::size_t k = cfg.colors.size();
  const auto e = make_enumeration(k + 1, cfg.cell_h * cfg.cell_w);
  const auto scores = score_all(scorer, image, label, cfg, e, true);
  const double color_prob = cfg.p_mask / static_cast<double>(k);
  const double keep_prob = 1.0 - cfg.p_mask;
  std::vector<ScalarGrid> out(k, ScalarGrid(cfg.cell_h, cfg.cell_w));
  for (std::size_t i = 0; i < e.count; ++i) {
    const auto s = e.states(i);
    const double weighted = scores[i] * probability(s, cfg, true);
    for (std::size_t c = 0; c < e.cells; ++c) {
      const double m0 = s[c] == 0 ? 1.0 : 0.0;
      for (std::size_t j = 1; j <= k; ++j) {
        const double mk = s[c] == j ? 1.0 : 0.0;
        out[j - 1][c] += (mk / color_prob - m0 / keep_prob) * weighted;
      }
    }
  }
  return out;
}

ScalarGrid pool_to_cells(const ScalarGrid& full, std::size_t cell_h, std::size_t cell_w) {
  if (cell_h == 0 || cell_w == 0 || cell_h > full.height() || cell_w > full.width()) {
    throw ConfigError("pool_to_cells: invalid cell grid");
  }
  ScalarGrid sum(cell_h, cell_w);
  ScalarGrid count(cell_h, cell_w);
  for (std::size_t y = 0; y < full.height(); ++y) {
    const std::size_t cy = std::min(y * cell_h / full.height(), cell_h - 1);
    for (std::size_t x = 0; x < full.width(); ++x) {
      const std::size_t cx = std::min(x * cell_w / full.width(), cell_w - 1);
      sum(cy, cx) += full(y, x);
      count(cy, cx) += 1.0;
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
  return sum;
}

}  // namespace colorsal::oracle
