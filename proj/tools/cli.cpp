#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "colorsal/error.hpp"
#include "colorsal/estimators.hpp"
#include "colorsal/heatmap.hpp"
#include "colorsal/http_scorer.hpp"
#include "colorsal/image_io.hpp"
#include "colorsal/maskgen.hpp"
#include "colorsal/metrics.hpp"
#include "colorsal/synthetic.hpp"
#include "properties.hpp"

namespace colorsal::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- settings ----------------------------------------------------------------

const std::set<std::string> kKeys = {
    "model", "image",   "labels",  "method",  "metric",     "num_masks", "pmask",
    "cell_grid", "colors", "seed", "batch_size", "workers", "steps",     "epsilon",
    "out_dir",  "interpolate", "shift", "quick", "saliency", "dump_masks"};

struct Settings {
  std::string model;
  std::string image;
  std::vector<std::string> labels;
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  RunConfig cfg;
  int workers = 1;
  std::size_t steps = 100;
  std::optional<double> epsilon;
  std::string out_dir = "colorsal-out";
  bool quick = false;
  bool tamper = false;
  std::vector<std::string> saliency;
  std::size_t dump_masks = 0;
};

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::uint64_t parse_u64(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError("--" + key + " must be non-negative");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  const std::string s = as_text(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("--" + key + ": expected a non-negative integer, got '" + s + "'");
  }
  return out;
}

double parse_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  const std::string s = as_text(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + key + ": expected a number, got '" + s + "'");
}

bool parse_bool(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  const std::string s = as_text(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("'" + key + "': expected true or false");
}

std::vector<std::string> parse_list(const json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(as_text(e));
    return out;
  }
  std::stringstream ss(as_text(v));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Rgb parse_hex(std::string s) {
  if (!s.empty() && s[0] == '#') s.erase(0, 1);
  if (s.size() != 6 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); })) {
    throw ConfigError("color '" + s + "' is not #RRGGBB hex");
  }
  Rgb c;
  for (int i = 0; i < 3; ++i) c[i] = static_cast<float>(std::stoi(s.substr(2 * i, 2), nullptr, 16)) / 255.f;
  return c;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) {
    const auto n = parse_u64(json(s), "cell-grid");
    return {n, n};
  }
  return {parse_u64(json(s.substr(0, x)), "cell-grid"), parse_u64(json(s.substr(x + 1)), "cell-grid")};
}

Settings settings_from(const json& merged) {
  Settings s;
  s.cfg.colors = default_palette();
  for (const auto& [key, v] : merged.items()) {
    if (key == "model") s.model = as_text(v);
    else if (key == "image") s.image = as_text(v);
    else if (key == "labels") s.labels = parse_list(v);
    else if (key == "method") s.methods = parse_list(v);
    else if (key == "metric") s.metrics = parse_list(v);
    else if (key == "num_masks") s.cfg.num_masks = parse_u64(v, "num-masks");
    else if (key == "pmask") s.cfg.p_mask = parse_double(v, "pmask");
    else if (key == "cell_grid") std::tie(s.cfg.cell_h, s.cfg.cell_w) = parse_grid(as_text(v));
    else if (key == "colors") {
      s.cfg.colors.clear();
      for (const auto& c : parse_list(v)) s.cfg.colors.push_back(parse_hex(c));
      if (s.cfg.colors.empty()) throw ConfigError("--colors: empty color list");
    } else if (key == "seed") s.cfg.seed = parse_u64(v, "seed");
    else if (key == "batch_size") s.cfg.batch_size = parse_u64(v, "batch-size");
    else if (key == "workers") {
      const auto w = parse_u64(v, "workers");
      if (w < 1 || w > 1024) throw ConfigError("--workers must be in [1, 1024]");
      s.workers = static_cast<int>(w);
    } else if (key == "steps") s.steps = parse_u64(v, "steps");
    else if (key == "epsilon") s.epsilon = parse_double(v, "epsilon");
    else if (key == "out_dir") s.out_dir = as_text(v);
    else if (key == "interpolate") s.cfg.interpolate = parse_bool(v, key);
    else if (key == "shift") s.cfg.shift = parse_bool(v, key);
    else if (key == "quick") s.quick = parse_bool(v, key);
    else if (key == "saliency") s.saliency = parse_list(v);
    else if (key == "dump_masks") s.dump_masks = parse_u64(v, "dump-masks");
    else if (key == "tamper") s.tamper = parse_bool(v, key);
  }
  if (s.steps == 0) throw ConfigError("--steps must be at least 1");
  if (s.epsilon && !(*s.epsilon > 0.0)) throw ConfigError("--epsilon must be positive");
  return s;
}

json load_config(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("config '" + path + "': unknown key '" + key + "'");
  }
  return j;
}

// ---- helpers -----------------------------------------------------------------

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_key(const std::string& label) {
  std::string key;
  for (unsigned char c : label) key += (std::isalnum(c) || c == '-' || c == '.') ? static_cast<char>(c) : '_';
  return key.empty() ? "_" : key;
}

std::unique_ptr<ModelScorer> make_scorer(const std::string& model) {
  if (model.empty()) throw ConfigError("--model is required (http://host:port or synthetic:<spec>)");
  if (model.rfind("synthetic:", 0) == 0) return make_synthetic_scorer(parse_synthetic_spec(model.substr(10)));
  if (model.rfind("http://", 0) == 0) return std::make_unique<HttpScorer>(model);
  throw ConfigError("--model '" + model + "': expected http://host:port or synthetic:<spec>");
}

std::vector<std::string> resolve_labels(const Settings& s, const ModelScorer& scorer) {
  std::vector<std::string> labels = s.labels;
  if (labels.empty()) {
    if (const auto* http = dynamic_cast<const HttpScorer*>(&scorer)) {
      const auto advertised = http->health();
      if (advertised.empty()) throw ConfigError("model server advertises no labels; pass --labels");
      labels.push_back(advertised.front());
    } else {
      labels.push_back("target");
    }
  }
  std::set<std::string> keys;
  for (const auto& l : labels) {
    if (!keys.insert(file_key(l)).second) throw ConfigError("labels collide after file-name sanitizing: '" + l + "'");
  }
  return labels;
}

Image load_input(const Settings& s) {
  if (s.image.empty()) throw ConfigError("--image is required");
  return load_image(s.image);
}

json config_json(const RunConfig& cfg, bool color) {
  json colors = json::array();
  if (color) {
    for (const auto& c : cfg.colors) colors.push_back(to_hex(c));
  }
  return {{"num_masks", cfg.num_masks},   {"p_mask", cfg.p_mask},
          {"cell_grid", {cfg.cell_h, cfg.cell_w}}, {"colors", colors},
          {"seed", cfg.seed},             {"interpolate", cfg.interpolate},
          {"shift", cfg.shift},           {"batch_size", cfg.batch_size}};
}

// Files written by one command. Unless commit() is called, everything written
// is deleted again (and the output directory too, if this run created it).
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
    if (fs::exists(dir_)) {
      if (!fs::is_directory(dir_)) throw ConfigError("--out-dir '" + dir_.string() + "' is not a directory");
    } else {
      std::error_code ec;
      fs::create_directories(dir_, ec);
      if (ec) throw ConfigError("cannot create --out-dir '" + dir_.string() + "': " + ec.message());
      created_ = true;
    }
  }
  Artifacts(const Artifacts&) = delete;
  Artifacts& operator=(const Artifacts&) = delete;

  ~Artifacts() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) {
      // A directory under an artifact's name was never ours.
      if (!fs::is_directory(dir_ / f, ec)) fs::remove(dir_ / f, ec);
    }
    if (created_) fs::remove_all(dir_, ec);
  }

  void bytes(const std::string& name, const std::vector<std::uint8_t>& data) {
    claim(name);
    const std::string text(data.begin(), data.end());
    write_text_file(dir_ / name, text);
  }
  void text(const std::string& name, const std::string& data) {
    claim(name);
    write_text_file(dir_ / name, data);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump() + "\n"); }
  void png(const std::string& name, const Image& image) {
    claim(name);
    save_png(dir_ / name, image);
  }

  json listing() const {
    json out = json::array();
    for (const auto& f : files_) {
      const auto data = read_file_bytes(dir_ / f);
      out.push_back({{"name", f}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
    }
    return out;
  }

  void commit() { committed_ = true; }
  const fs::path& dir() const { return dir_; }

 private:
  void claim(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) != files_.end()) {
      throw Error("artifact '" + name + "' written twice");
    }
    files_.push_back(name);
  }

  fs::path dir_;
  bool created_ = false;
  bool committed_ = false;
  std::vector<std::string> files_;
};

void write_manifest(Artifacts& art, const std::string& command, const Settings& s, const json& config,
                    const ModelScorer& scorer, const std::vector<std::string>& labels, const Image& image,
                    const std::string& started, std::chrono::steady_clock::time_point t0, json extra) {
  const auto image_bytes = read_file_bytes(s.image);
  json m = {{"engine", "colorsal"},
            {"engine_version", COLORSAL_VERSION},
            {"command", command},
            {"config", config},
            {"workers", s.workers},
            {"scorer", scorer.identity()},
            {"labels", labels},
            {"image",
             {{"path", s.image},
              {"height", image.height()},
              {"width", image.width()},
              {"sha256", sha256_hex(image_bytes)}}},
            {"wall_clock",
             {{"started_utc", started},
              {"elapsed_seconds",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}}},
            {"files", art.listing()}};
  m.update(extra);
  art.json_file("manifest.json", m);
}

enum class Method { kRise, kDebias, kMcrise, kRandom };

Method parse_method(const std::string& m, bool allow_random) {
  if (m == "rise") return Method::kRise;
  if (m == "debias") return Method::kDebias;
  if (m == "mcrise") return Method::kMcrise;
  if (m == "random" && allow_random) return Method::kRandom;
  throw ConfigError("--method '" + m + "': expected rise, debias, mcrise" +
                    (allow_random ? std::string(" or random") : std::string()));
}

RunConfig method_config(const Settings& s, Method method, const Image& image) {
  RunConfig cfg = s.cfg;
  if (method != Method::kMcrise) cfg.colors.clear();
  cfg.validate_for(image.height(), image.width());
  return cfg;
}

json response_json(const ColorSaliencyStack& stack, std::optional<double> epsilon) {
  const ResponseClassGrid grid = classify_color_response(stack, epsilon);
  json rows = json::array();
  std::map<std::string, std::size_t> counts;
  for (std::size_t y = 0; y < grid.height; ++y) {
    json row = json::array();
    for (std::size_t x = 0; x < grid.width; ++x) {
      const std::string d = describe(grid.at(y, x));
      row.push_back(d);
      const auto& px = grid.at(y, x);
      if (px.category != ResponseCategory::kPerColor) {
        ++counts[d];
      } else {
        ++counts["per_color"];
      }
    }
    rows.push_back(std::move(row));
  }
  json colors = json::array();
  for (const auto& c : stack.colors) colors.push_back(to_hex(c));
  return {{"label", stack.label}, {"epsilon", grid.epsilon}, {"colors", colors},
          {"height", grid.height}, {"width", grid.width},  {"counts", counts},
          {"classes", std::move(rows)}};
}

void dump_masks(Artifacts& art, const RunConfig& cfg, const Image& image, std::size_t count) {
  const MaskGenerator gen(cfg, image.height(), image.width());
  for (std::size_t n = 0; n < std::min(count, cfg.num_masks); ++n) {
    std::ostringstream name;
    name << "mask_" << std::setw(6) << std::setfill('0') << n << ".bin";
    if (cfg.colors.empty()) {
      const auto m = gen.binary(n);
      art.bytes(name.str(), encode_grid_binary(std::span(&m.mask, 1)));
    } else {
      auto m = gen.color(n);
      m.channels.push_back(m.nonmasked);
      art.bytes(name.str(), encode_grid_binary(m.channels));
    }
  }
}

// ---- explain -----------------------------------------------------------------

int cmd_explain(const Settings& s, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  if (s.methods.size() > 1) throw ConfigError("explain takes a single --method");
  const std::string method_name = s.methods.empty() ? "mcrise" : s.methods.front();
  const Method method = parse_method(method_name, false);
  const Image image = load_input(s);
  const RunConfig cfg = method_config(s, method, image);
  const auto scorer = make_scorer(s.model);
  const auto labels = resolve_labels(s, *scorer);

  EstimatorOptions opts;
  opts.workers = s.workers;
  Artifacts art(s.out_dir);

  if (method == Method::kMcrise) {
    const auto stacks = mcrise_saliency(*scorer, image, labels, cfg, opts);
    for (const auto& st : stacks) {
      const std::string key = file_key(st.label);
      json j = stack_to_json(st.channels);
      json colors = json::array();
      for (const auto& c : st.colors) colors.push_back(to_hex(c));
      j.update({{"method", "mcrise"}, {"label", st.label}, {"n_samples", st.n_samples}, {"colors", colors}});
      art.json_file("saliency_" + key + ".json", j);
      art.bytes("saliency_" + key + ".bin", encode_grid_binary(st.channels));
      const HeatmapRange range = joint_range(st.channels);
      for (std::size_t k = 0; k < st.channels.size(); ++k) {
        art.png("heatmap_" + key + "_" + std::to_string(k + 1) + "_" + to_hex(st.colors[k]).substr(1) + ".png",
                render_heatmap(st.channels[k], HeatmapMode::kSigned, range));
      }
      art.png("panel_" + key + ".png", compose_color_panel(st.channels, st.colors));
      art.json_file("response_" + key + ".json", response_json(st, s.epsilon));
      out << "mcrise  " << st.label << ": " << st.channels.size() << " color maps, range ["
          << range.lo << ", " << range.hi << "]\n";
    }
  } else {
    const auto maps = method == Method::kRise ? rise_saliency(*scorer, image, labels, cfg, opts)
                                              : debiased_saliency(*scorer, image, labels, cfg, opts);
    const HeatmapMode mode = method == Method::kRise ? HeatmapMode::kUnsigned : HeatmapMode::kSigned;
    for (const auto& m : maps) {
      const std::string key = file_key(m.label);
      json j = grid_to_json(m.grid);
      j.update({{"method", method_name},
                {"label", m.label},
                {"kind", m.kind == MapKind::kRise ? "rise" : "debiased"},
                {"n_samples", m.n_samples}});
      art.json_file("saliency_" + key + ".json", j);
      art.bytes("saliency_" + key + ".bin", encode_grid_binary(std::span(&m.grid, 1)));
      art.png("heatmap_" + key + ".png", render_heatmap(m.grid, mode));
      art.png("overlay_" + key + ".png", overlay(m.grid, image, 0.5, mode));
      const HeatmapRange range = joint_range(std::span(&m.grid, 1));
      out << method_name << "  " << m.label << ": range [" << range.lo << ", " << range.hi << "]\n";
    }
  }
  if (s.dump_masks > 0) dump_masks(art, cfg, image, s.dump_masks);

  write_manifest(art, "explain", s, config_json(cfg, method == Method::kMcrise), *scorer, labels, image,
                 started, t0, {{"method", method_name}});
  art.commit();
  out << "wrote " << art.dir().string() << "\n";
  return kOk;
}

// ---- evaluate ----------------------------------------------------------------

struct Explanation {
  std::string name;  // method name, or method@file for loaded artifacts
  Method method = Method::kRandom;
  std::string label;
  std::optional<ScalarGrid> map;
  std::optional<ColorSaliencyStack> stack;
};

Explanation load_explanation(const std::string& path, const Image& image) {
  const auto bytes = read_file_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("saliency '" + path + "': " + e.what());
  }
  Explanation e;
  try {
    e.method = parse_method(j.at("method").get<std::string>(), false);
    e.label = j.at("label").get<std::string>();
  } catch (const json::exception& ex) {
    throw ValidationError("saliency '" + path + "': " + ex.what());
  }
  e.name = j["method"].get<std::string>() + "@" + fs::path(path).filename().string();
  auto grids = stack_from_json(j);
  for (const auto& g : grids) {
    if (g.height() != image.height() || g.width() != image.width()) {
      throw ValidationError("saliency '" + path + "' does not match the image dimensions");
    }
  }
  if (e.method == Method::kMcrise) {
    ColorSaliencyStack st;
    st.label = e.label;
    st.channels = std::move(grids);
    for (const auto& c : j.at("colors")) st.colors.push_back(parse_hex(c.get<std::string>()));
    if (st.colors.size() != st.channels.size()) {
      throw ValidationError("saliency '" + path + "': one color per channel required");
    }
    e.stack = std::move(st);
  } else {
    if (grids.size() != 1) throw ValidationError("saliency '" + path + "': expected a single map");
    e.map = std::move(grids.front());
  }
  return e;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const Image image = load_input(s);
  const auto scorer = make_scorer(s.model);
  const auto labels = resolve_labels(s, *scorer);
  std::vector<std::string> methods = s.methods;
  if (methods.empty() && s.saliency.empty()) methods = {"rise", "mcrise", "random"};
  const std::vector<std::string> metrics = s.metrics.empty() ? std::vector<std::string>{"ca-deletion"} : s.metrics;
  for (const auto& m : metrics) {
    if (m != "deletion" && m != "ca-deletion") {
      throw ConfigError("--metric '" + m + "': expected deletion or ca-deletion");
    }
  }

  EstimatorOptions opts;
  opts.workers = s.workers;
  std::vector<Explanation> explanations;
  json configs = json::object();
  for (const auto& name : methods) {
    const Method method = parse_method(name, true);
    if (method == Method::kRandom) {
      for (const auto& l : labels) explanations.push_back({name, method, l, std::nullopt, std::nullopt});
      continue;
    }
    const RunConfig cfg = method_config(s, method, image);
    configs[name] = config_json(cfg, method == Method::kMcrise);
    if (method == Method::kMcrise) {
      for (auto& st : mcrise_saliency(*scorer, image, labels, cfg, opts)) {
        explanations.push_back({name, method, st.label, std::nullopt, std::move(st)});
      }
    } else {
      auto maps = method == Method::kRise ? rise_saliency(*scorer, image, labels, cfg, opts)
                                          : debiased_saliency(*scorer, image, labels, cfg, opts);
      for (auto& m : maps) explanations.push_back({name, method, m.label, std::move(m.grid), std::nullopt});
    }
  }
  for (const auto& path : s.saliency) explanations.push_back(load_explanation(path, image));
  if (explanations.empty()) throw ConfigError("evaluate: nothing to evaluate");

  Artifacts art(s.out_dir);
  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(16) << "label" << std::setw(13) << "metric" << std::setw(28) << "method"
        << std::setw(14) << "fill" << "auc\n";
  for (const auto& metric : metrics) {
    for (const auto& e : explanations) {
      DeletionCurve curve;
      std::string fill = "black";
      if (e.method == Method::kMcrise && metric == "ca-deletion") {
        curve = ca_deletion(*scorer, image, e.label, *e.stack, s.steps, s.cfg.batch_size, s.workers);
        fill = "argmin-color";
      } else {
        std::vector<std::size_t> order;
        if (e.method == Method::kRandom) order = random_order(image.pixels(), s.cfg.seed);
        else if (e.stack) order = order_by_min_color(*e.stack);
        else order = order_by_saliency(*e.map);
        curve = deletion_curve(*scorer, image, e.label, order, PixelFill::black(), s.steps, s.cfg.batch_size,
                               s.workers);
      }
      const std::string stem = "curve_" + file_key(e.name) + "_" + metric + "_" + file_key(e.label);
      art.text(stem + ".csv", curve_to_csv(curve));
      json cj = curve_to_json(curve);
      cj.update({{"method", e.name}, {"metric", metric}, {"label", e.label}, {"fill", fill}});
      art.json_file(stem + ".json", cj);
      rows.push_back({{"label", e.label}, {"metric", metric}, {"method", e.name}, {"fill", fill}, {"auc", curve.auc}});
      table << std::setw(16) << e.label << std::setw(13) << metric << std::setw(28) << e.name << std::setw(14)
            << fill << std::fixed << std::setprecision(4) << curve.auc << "\n";
    }
  }
  art.json_file("summary.json", {{"steps", s.steps}, {"rows", rows}});
  art.text("summary.txt", table.str());
  write_manifest(art, "evaluate", s, configs, *scorer, labels, image, started, t0,
                 {{"methods", methods}, {"metrics", metrics}, {"steps", s.steps}, {"saliency", s.saliency}});
  art.commit();
  out << table.str();
  return kOk;
}

// ---- selftest ----------------------------------------------------------------

int cmd_selftest(const Settings& s, std::ostream& out) {
  props::Params p;
  p.num_masks = s.quick ? 20000 : 100000;
  p.workers = s.workers;
  p.tamper = s.tamper;
  if (s.cfg.seed != 0) p.seed = s.cfg.seed;
  const std::size_t pou = s.quick ? 200 : 1000;

  std::vector<props::Result> results;
  results.push_back(props::timed("oracle_rise", [&] { return props::oracle_rise(p); }));
  results.push_back(props::timed("oracle_debiased", [&] { return props::oracle_debiased(p); }));
  results.push_back(props::timed("oracle_mcrise", [&] { return props::oracle_mcrise(p); }));
  results.push_back(props::timed("oracle_dual_forms", [] { return props::oracle_dual_forms(); }));
  results.push_back(props::timed("ignored_cells_vanish", [] { return props::ignored_cells_vanish(); }));
  results.push_back(props::timed("constant_nullity", [] { return props::constant_nullity(); }));
  results.push_back(props::timed("partition_of_unity", [&] { return props::partition_of_unity(pou, p.seed); }));
  results.push_back(props::timed("linearity", [&] { return props::linearity(200, p.seed, p.workers); }));

  std::size_t passed = 0;
  for (const auto& r : results) {
    passed += r.pass ? 1 : 0;
    out << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name << r.detail << " ["
        << std::fixed << std::setprecision(2) << r.seconds << " s]\n";
  }
  out << passed << "/" << results.size() << " properties passed\n";
  return passed == results.size() ? kOk : kFailure;
}

// ---- parsing -----------------------------------------------------------------

struct Flag {
  std::string key;
  CLI::Option* option = nullptr;
  std::string value;
};

void add_run_flags(CLI::App& app, std::vector<std::unique_ptr<Flag>>& flags, bool evaluate) {
  auto add = [&](const std::string& name, const std::string& key, const std::string& help) {
    auto f = std::make_unique<Flag>();
    f->key = key;
    f->option = app.add_option(name, f->value, help);
    flags.push_back(std::move(f));
  };
  add("--model", "model", "http://host:port or synthetic:<spec>");
  add("--image", "image", "input PNG or JPEG");
  add("--labels", "labels", "comma-separated labels");
  add("--method", "method",
      evaluate ? "comma-separated methods: rise, debias, mcrise, random" : "rise, debias or mcrise (default mcrise)");
  if (evaluate) {
    add("--metric", "metric", "comma-separated metrics: deletion, ca-deletion (default ca-deletion)");
    add("--steps", "steps", "removal steps per curve (default 100)");
    add("--saliency", "saliency", "comma-separated saliency JSON artifacts to evaluate");
  } else {
    add("--epsilon", "epsilon", "response-class threshold (default 10% of max |S|)");
    add("--dump-masks", "dump_masks", "also write the first N masks as mask_NNNNNN.bin");
  }
  add("--num-masks", "num_masks", "Monte-Carlo samples N (default 8000)");
  add("--pmask", "pmask", "masking probability (default 0.5)");
  add("--cell-grid", "cell_grid", "low-resolution grid HxW (default 8x8)");
  add("--colors", "colors", "comma-separated #RRGGBB masking colors (default red,green,blue,white,black)");
  add("--seed", "seed", "random seed (default 0)");
  add("--batch-size", "batch_size", "images per score request (default 32)");
  add("--workers", "workers", "parallel workers (default 1)");
  add("--out-dir", "out_dir", "output directory (default colorsal-out)");
}

}  // namespace

std::string to_hex(const std::array<float, 3>& color) {
  char buf[8];
  auto byte = [](float v) { return static_cast<int>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", byte(color[0]), byte(color[1]), byte(color[2]));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"colorsal: RISE, debiased RISE and MC-RISE saliency for black-box classifiers", "colorsal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", COLORSAL_VERSION);

  std::vector<std::unique_ptr<Flag>> flags;
  std::string config_path;
  bool no_interpolate = false, no_shift = false, quick = false, tamper = false;

  CLI::App* explain = app.add_subcommand("explain", "compute saliency maps and write artifacts");
  CLI::App* evaluate = app.add_subcommand("evaluate", "deletion / CA-deletion curves and AUC summary");
  CLI::App* selftest = app.add_subcommand("selftest", "check estimators against the exact oracle");
  for (CLI::App* sub : {explain, evaluate}) {
    add_run_flags(*sub, flags, sub == evaluate);
    sub->add_option("--config", config_path, "JSON config file (flags take precedence)");
    sub->add_flag("--no-interpolate", no_interpolate, "nearest-neighbor mask upsampling");
    sub->add_flag("--no-shift", no_shift, "disable the random mask shift");
  }
  selftest->add_flag("--quick", quick, "smaller Monte-Carlo sizes (finishes in seconds)");
  {
    auto f = std::make_unique<Flag>();
    f->key = "workers";
    f->option = selftest->add_option("--workers", f->value, "parallel workers (default 1)");
    flags.push_back(std::move(f));
    auto g = std::make_unique<Flag>();
    g->key = "seed";
    g->option = selftest->add_option("--seed", g->value, "base seed");
    flags.push_back(std::move(g));
  }
  selftest->add_flag("--tamper", tamper, "negative control: corrupt the accumulators")->group("");

  std::vector<std::string> argv_store{"colorsal"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << COLORSAL_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    json merged = config_path.empty() ? json::object() : load_config(config_path);
    for (const auto& f : flags) {
      if (f->option->count() > 0) merged[f->key] = f->value;
    }
    if (no_interpolate) merged["interpolate"] = false;
    if (no_shift) merged["shift"] = false;
    if (quick) merged["quick"] = true;
    if (tamper) merged["tamper"] = true;
    const Settings s = settings_from(merged);

    if (explain->parsed()) return cmd_explain(s, out);
    if (evaluate->parsed()) return cmd_evaluate(s, out);
    return cmd_selftest(s, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << "\n";
    return kTransportError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace colorsal::cli
