#include "colorsal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "colorsal/error.hpp"

namespace colorsal {
namespace {

using Kind = SyntheticScorerSpec::Kind;

Kind kind_from_name(const std::string& name) {
  if (name == "constant") return Kind::kConstant;
  if (name == "pixel_linear") return Kind::kPixelLinear;
  if (name == "region_color") return Kind::kRegionColor;
  if (name == "ignore_pixel") return Kind::kIgnorePixel;
  if (name == "weighted_sum") return Kind::kWeightedSum;
  throw ConfigError("unknown synthetic scorer kind '" + name + "'");
}

nlohmann::json rect_to_json(const Rect& r) { return {r.row0, r.col0, r.row1, r.col1}; }

Rect rect_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("rect must be [row0, col0, row1, col1]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>(),
          j[3].get<std::size_t>()};
}

// Raw (unclamped) value of `spec` on `image`.
double evaluate(const SyntheticScorerSpec& spec, const Image& image) {
  switch (spec.kind) {
    case Kind::kConstant:
      return spec.value;
    case Kind::kPixelLinear: {
      if (image.height() != spec.height || image.width() != spec.width) {
        throw ValidationError("pixel_linear scorer expects " + std::to_string(spec.height) + "x" +
                              std::to_string(spec.width) + " images");
      }
      double sum = spec.bias;
      const auto data = image.data();
      for (std::size_t i = 0; i < data.size(); ++i) sum += spec.weights[i] * data[i];
      return sum;
    }
    case Kind::kRegionColor: {
      const Rect& r = spec.region;
      if (r.row1 > image.height() || r.col1 > image.width()) {
        throw ValidationError("region_color scorer region exceeds the image");
      }
      const double inv = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
      double sum = 0.0;
      for (std::size_t y = r.row0; y < r.row1; ++y) {
        for (std::size_t x = r.col0; x < r.col1; ++x) {
          const float* p = image.pixel(y, x);
          double d2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double d = static_cast<double>(p[c]) - spec.target[c];
            d2 += d * d;
          }
          sum += std::exp(-d2 * inv);
        }
      }
      return sum / static_cast<double>(r.area());
    }
    case Kind::kIgnorePixel: {
      Image masked = image;
      for (const auto& r : spec.ignored) {
        for (std::size_t y = r.row0; y < std::min(r.row1, image.height()); ++y) {
          for (std::size_t x = r.col0; x < std::min(r.col1, image.width()); ++x) {
            masked.set(y, x, {0.f, 0.f, 0.f});
          }
        }
      }
      return std::clamp(evaluate(spec.children.front(), masked), 0.0, 1.0);
    }
    case Kind::kWeightedSum: {
      double sum = 0.0;
      for (std::size_t j = 0; j < spec.children.size(); ++j) {
        sum += spec.coefficients[j] * std::clamp(evaluate(spec.children[j], image), 0.0, 1.0);
      }
      return sum;
    }
  }
  return 0.0;
}

class SyntheticScorer final : public ModelScorer {
 public:
  explicit SyntheticScorer(SyntheticScorerSpec spec) : spec_(std::move(spec)) {}

  ScoreMatrix score_batch(std::span<const Image> images,
                          std::span<const std::string> labels) const override {
    if (images.empty()) throw ValidationError("score_batch: empty batch");
    if (!spec_.labels.empty()) {
      for (const auto& l : labels) {
        if (std::find(spec_.labels.begin(), spec_.labels.end(), l) == spec_.labels.end()) {
          throw ConfigError("synthetic scorer: unknown label '" + l + "'");
        }
      }
    }
    ScoreMatrix out(images.size(), labels.size());
    for (std::size_t r = 0; r < images.size(); ++r) {
      const double v = std::clamp(evaluate(spec_, images[r]), 0.0, 1.0);
      for (std::size_t c = 0; c < labels.size(); ++c) out(r, c) = v;
    }
    return out;
  }

  std::string identity() const override { return "synthetic:" + spec_.to_json().dump(); }

 private:
  SyntheticScorerSpec spec_;
};

}  // namespace

std::string kind_name(Kind kind) {
  switch (kind) {
    case Kind::kConstant: return "constant";
    case Kind::kPixelLinear: return "pixel_linear";
    case Kind::kRegionColor: return "region_color";
    case Kind::kIgnorePixel: return "ignore_pixel";
    case Kind::kWeightedSum: return "weighted_sum";
  }
  return "unknown";
}

SyntheticScorerSpec SyntheticScorerSpec::constant(double c) {
  SyntheticScorerSpec s;
  s.kind = Kind::kConstant;
  s.value = c;
  return s;
}

SyntheticScorerSpec SyntheticScorerSpec::pixel_linear(std::size_t height, std::size_t width,
                                                      std::vector<double> weights, double bias) {
  SyntheticScorerSpec s;
  s.kind = Kind::kPixelLinear;
  s.height = height;
  s.width = width;
  s.weights = std::move(weights);
  s.bias = bias;
  return s;
}

SyntheticScorerSpec SyntheticScorerSpec::uniform_pixel_linear(std::size_t height, std::size_t width) {
  const double w = 1.0 / static_cast<double>(3 * height * width);
  return pixel_linear(height, width, std::vector<double>(3 * height * width, w));
}

SyntheticScorerSpec SyntheticScorerSpec::region_color(Rect region, Rgb target, double bandwidth) {
  SyntheticScorerSpec s;
  s.kind = Kind::kRegionColor;
  s.region = region;
  s.target = target;
  s.bandwidth = bandwidth;
  return s;
}

SyntheticScorerSpec SyntheticScorerSpec::ignore_pixel(SyntheticScorerSpec base, std::vector<Rect> ignored) {
  SyntheticScorerSpec s;
  s.kind = Kind::kIgnorePixel;
  s.ignored = std::move(ignored);
  s.children.push_back(std::move(base));
  return s;
}

SyntheticScorerSpec SyntheticScorerSpec::weighted_sum(std::vector<SyntheticScorerSpec> children,
                                                      std::vector<double> coefficients) {
  SyntheticScorerSpec s;
  s.kind = Kind::kWeightedSum;
  s.children = std::move(children);
  s.coefficients = std::move(coefficients);
  return s;
}

void SyntheticScorerSpec::validate() const {
  switch (kind) {
    case Kind::kConstant:
      if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("constant scorer value must be in [0,1]");
      break;
    case Kind::kPixelLinear:
      if (height == 0 || width == 0) throw ConfigError("pixel_linear needs a positive size");
      if (weights.size() != height * width * 3) {
        throw ConfigError("pixel_linear needs height*width*3 = " + std::to_string(height * width * 3) +
                          " weights, got " + std::to_string(weights.size()));
      }
      for (double w : weights) {
        if (!std::isfinite(w)) throw ConfigError("pixel_linear weights must be finite");
      }
      if (!std::isfinite(bias)) throw ConfigError("pixel_linear bias must be finite");
      break;
    case Kind::kRegionColor:
      if (region.row1 <= region.row0 || region.col1 <= region.col0) {
        throw ConfigError("region_color region must be non-empty");
      }
      if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw ConfigError("region_color bandwidth must be positive");
      }
      for (float c : target) {
        if (!(c >= 0.f && c <= 1.f)) throw ConfigError("region_color target must be in [0,1]^3");
      }
      break;
    case Kind::kIgnorePixel:
      if (children.size() != 1) throw ConfigError("ignore_pixel needs exactly one base scorer");
      children.front().validate();
      break;
    case Kind::kWeightedSum:
      if (children.empty() || children.size() != coefficients.size()) {
        throw ConfigError("weighted_sum needs one coefficient per child");
      }
      for (const auto& c : children) c.validate();
      for (double a : coefficients) {
        if (!std::isfinite(a)) throw ConfigError("weighted_sum coefficients must be finite");
      }
      break;
  }
}

nlohmann::json SyntheticScorerSpec::to_json() const {
  nlohmann::json j = {{"kind", kind_name(kind)}};
  switch (kind) {
    case Kind::kConstant:
      j["value"] = value;
      break;
    case Kind::kPixelLinear:
      j["height"] = height;
      j["width"] = width;
      j["weights"] = weights;
      j["bias"] = bias;
      break;
    case Kind::kRegionColor:
      j["region"] = rect_to_json(region);
      j["target"] = {target[0], target[1], target[2]};
      j["bandwidth"] = bandwidth;
      break;
    case Kind::kIgnorePixel: {
      nlohmann::json rects = nlohmann::json::array();
      for (const auto& r : ignored) rects.push_back(rect_to_json(r));
      j["ignored"] = std::move(rects);
      j["base"] = children.front().to_json();
      break;
    }
    case Kind::kWeightedSum: {
      nlohmann::json terms = nlohmann::json::array();
      for (std::size_t i = 0; i < children.size(); ++i) {
        terms.push_back({{"coefficient", coefficients[i]}, {"scorer", children[i].to_json()}});
      }
      j["terms"] = std::move(terms);
      break;
    }
  }
  if (!labels.empty()) j["labels"] = labels;
  return j;
}

SyntheticScorerSpec SyntheticScorerSpec::from_json(const nlohmann::json& j) {
  try {
    SyntheticScorerSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    switch (s.kind) {
      case Kind::kConstant:
        s.value = j.at("value").get<double>();
        break;
      case Kind::kPixelLinear:
        s.height = j.at("height").get<std::size_t>();
        s.width = j.at("width").get<std::size_t>();
        if (j.value("uniform", false)) {
          s = uniform_pixel_linear(s.height, s.width);
        } else {
          s.weights = j.at("weights").get<std::vector<double>>();
        }
        s.bias = j.value("bias", 0.0);
        break;
      case Kind::kRegionColor: {
        s.region = rect_from_json(j.at("region"));
        const auto t = j.at("target").get<std::vector<double>>();
        if (t.size() != 3) throw ConfigError("region_color target must have 3 channels");
        s.target = {static_cast<float>(t[0]), static_cast<float>(t[1]), static_cast<float>(t[2])};
        s.bandwidth = j.at("bandwidth").get<double>();
        break;
      }
      case Kind::kIgnorePixel:
        for (const auto& r : j.at("ignored")) s.ignored.push_back(rect_from_json(r));
        s.children.push_back(from_json(j.at("base")));
        break;
      case Kind::kWeightedSum:
        for (const auto& t : j.at("terms")) {
          s.coefficients.push_back(t.at("coefficient").get<double>());
          s.children.push_back(from_json(t.at("scorer")));
        }
        break;
    }
    if (j.contains("labels")) s.labels = j.at("labels").get<std::vector<std::string>>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic scorer spec: ") + e.what());
  }
}

std::unique_ptr<ModelScorer> make_synthetic_scorer(SyntheticScorerSpec spec) {
  spec.validate();
  return std::make_unique<SyntheticScorer>(std::move(spec));
}

SyntheticScorerSpec parse_synthetic_spec(const std::string& text) {
  if (text.rfind("constant:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string arg = text.substr(9);
      const double c = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
      auto s = SyntheticScorerSpec::constant(c);
      s.validate();
      return s;
    } catch (const std::logic_error&) {
      throw ConfigError("bad constant scorer '" + text + "'");
    }
  }
  nlohmann::json j;
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw ConfigError("cannot open synthetic scorer spec '" + text.substr(1) + "'");
    j = nlohmann::json::parse(in, nullptr, false);
  } else {
    j = nlohmann::json::parse(text, nullptr, false);
  }
  if (j.is_discarded() || !j.is_object()) throw ConfigError("synthetic scorer spec is not a JSON object");
  return SyntheticScorerSpec::from_json(j);
}

}  // namespace colorsal
