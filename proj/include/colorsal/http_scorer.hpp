#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorsal/scorer.hpp"

namespace colorsal {

// Client for the JSON scoring protocol:
//
//   POST {base}/v1/score
//     {"id": str, "height": H, "width": W,
//      "images": [[[r,g,b], ... H*W pixels row-major], ...], "labels": [str, ...]}
//   -> {"id": str, "scores": [[s_label0, s_label1, ...], ...]}   one row per image
//
//   GET {base}/v1/health -> {"status": "ok", "labels": [str, ...]}
//
// Connection failures and 5xx responses are retried with exponential backoff;
// 4xx responses, id mismatches, malformed bodies and out-of-range scores fail
// immediately. Safe to share across threads.
class HttpScorer final : public ModelScorer {
 public:
  struct Options {
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
  };

  // `url` is "http://host:port" with an optional path prefix.
  explicit HttpScorer(std::string url);
  HttpScorer(std::string url, Options options);

  ScoreMatrix score_batch(std::span<const Image> images,
                          std::span<const std::string> labels) const override;
  std::string identity() const override { return url_; }

  // Labels advertised by /v1/health. Throws TransportError when unhealthy.
  std::vector<std::string> health() const;

  // Request body for a batch; exposed for protocol tests.
  static nlohmann::json encode_request(const std::string& id, std::span<const Image> images,
                                       std::span<const std::string> labels);
  // Validates and decodes a response body.
  static ScoreMatrix decode_response(const std::string& body, const std::string& expected_id,
                                     std::size_t images, std::size_t labels);

 private:
  std::string url_;
  std::string host_;  // scheme://host:port
  std::string prefix_;
  Options options_;
  mutable std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace colorsal
