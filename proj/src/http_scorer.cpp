#include "colorsal/http_scorer.hpp"

#include <thread>

#include <httplib.h>

#include "colorsal/error.hpp"

namespace colorsal {
namespace {

struct Reply {
  int status = 0;
  std::string body;
};

template <typename Call>
Reply with_retries(const HttpScorer::Options& opt, const std::string& what, Call&& call) {
  auto backoff = opt.backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Result res = call();
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    return {res->status, res->body};
  }
  throw TransportError(what + " failed after " + std::to_string(opt.retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace

HttpScorer::HttpScorer(std::string url) : HttpScorer(std::move(url), Options{}) {}

HttpScorer::HttpScorer(std::string url, Options options)
    : url_(std::move(url)), options_(options) {
  const auto scheme = url_.find("://");
  if (scheme == std::string::npos || url_.substr(0, scheme) != "http") {
    throw ConfigError("model URL must start with http:// (got '" + url_ + "')");
  }
  const auto path = url_.find('/', scheme + 3);
  host_ = url_.substr(0, path);
  if (path != std::string::npos) prefix_ = url_.substr(path);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (host_.size() <= scheme + 3) throw ConfigError("model URL has no host: '" + url_ + "'");
}

nlohmann::json HttpScorer::encode_request(const std::string& id, std::span<const Image> images,
                                          std::span<const std::string> labels) {
  if (images.empty()) throw ValidationError("score_batch: empty batch");
  const std::size_t h = images.front().height();
  const std::size_t w = images.front().width();
  nlohmann::json batch = nlohmann::json::array();
  for (const auto& img : images) {
    if (img.height() != h || img.width() != w) {
      throw ValidationError("score_batch: all images in a batch must share one size");
    }
    nlohmann::json pixels = nlohmann::json::array();
    for (std::size_t i = 0; i < img.pixels(); ++i) {
      const float* p = img.pixel(i);
      pixels.push_back({static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])});
    }
    batch.push_back(std::move(pixels));
  }
  return {{"id", id},
          {"height", h},
          {"width", w},
          {"images", std::move(batch)},
          {"labels", std::vector<std::string>(labels.begin(), labels.end())}};
}

ScoreMatrix HttpScorer::decode_response(const std::string& body, const std::string& expected_id,
                                        std::size_t images, std::size_t labels) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("model response is not a JSON object");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>() != expected_id) {
    throw ValidationError("model response id does not match request '" + expected_id + "'");
  }
  if (!j.contains("scores") || !j["scores"].is_array() || j["scores"].size() != images) {
    throw ValidationError("model response must carry one score row per image");
  }
  ScoreMatrix m(images, labels);
  for (std::size_t r = 0; r < images; ++r) {
    const auto& row = j["scores"][r];
    if (!row.is_array() || row.size() != labels) {
      throw ValidationError("model response row " + std::to_string(r) + " must have " +
                            std::to_string(labels) + " scores");
    }
    for (std::size_t c = 0; c < labels; ++c) {
      if (!row[c].is_number()) throw ValidationError("model response contains a non-numeric score");
      m(r, c) = row[c].get<double>();
    }
  }
  check_scores(m, images, labels, "model response");
  return m;
}

ScoreMatrix HttpScorer::score_batch(std::span<const Image> images,
                                    std::span<const std::string> labels) const {
  const std::string id = "req-" + std::to_string(next_id_.fetch_add(1));
  const std::string body = encode_request(id, images, labels).dump();

  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const Reply reply = with_retries(options_, "POST " + url_ + "/v1/score", [&] {
    return client.Post(prefix_ + "/v1/score", body, "application/json");
  });
  if (reply.status == 422) throw ConfigError("model server rejected labels: " + reply.body);
  if (reply.status != 200) {
    throw ValidationError("model server answered HTTP " + std::to_string(reply.status) + ": " + reply.body);
  }
  return decode_response(reply.body, id, images.size(), labels.size());
}

std::vector<std::string> HttpScorer::health() const {
  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  const Reply reply =
      with_retries(options_, "GET " + url_ + "/v1/health", [&] { return client.Get(prefix_ + "/v1/health"); });
  const auto j = nlohmann::json::parse(reply.body, nullptr, false);
  if (reply.status != 200 || j.is_discarded() || !j.is_object() || j.value("status", "") != "ok") {
    throw TransportError("model server at " + url_ + " is not healthy: " + reply.body);
  }
  if (!j.contains("labels") || !j["labels"].is_array()) {
    throw ValidationError("health response lacks a label list");
  }
  return j["labels"].get<std::vector<std::string>>();
}

}  // namespace colorsal
