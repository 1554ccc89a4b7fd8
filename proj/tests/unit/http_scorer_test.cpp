#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "colorsal/error.hpp"
#include "colorsal/http_scorer.hpp"

using namespace colorsal;
using nlohmann::json;

namespace {

// A loopback port nothing listens on: bound once, then closed.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Fixture scores, kept as the exact decimal strings the server sends.
const std::vector<std::string> kFixture{"0.1", "0.30000000000000004", "0.7071067811865476",
                                        "1e-17", "0.99999999999999989", "0", "1",
                                        "0.123456789012345678901234567890"};

// In-process model server. `reply` builds the response for one request; by
// default row i repeats fixture entry round(255 * red of pixel 0) per label.
class TestServer {
 public:
  using Reply = std::function<void(const json& req, httplib::Response& res)>;

  explicit TestServer(Reply reply = {}) : reply_(std::move(reply)) {
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const json body = json::parse(req.body);
      if (reply_) return reply_(body, res);
      res.set_content(fixture_reply(body), "application/json");
    });
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","labels":["cat","dog"]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  static std::string fixture_reply(const json& body) {
    std::string out = R"({"id":)" + body["id"].dump() + R"(,"scores":[)";
    const std::size_t labels = body["labels"].size();
    for (std::size_t i = 0; i < body["images"].size(); ++i) {
      const double red = body["images"][i][0][0].get<double>();
      const auto& s = kFixture[static_cast<std::size_t>(std::lround(red * 255.0)) % kFixture.size()];
      out += i ? ",[" : "[";
      for (std::size_t l = 0; l < labels; ++l) out += (l ? "," : "") + s;
      out += "]";
    }
    return out + "]}";
  }

  std::atomic<int> requests{0};

 private:
  httplib::Server server_;
  Reply reply_;
  int port_ = 0;
  std::thread thread_;
};

Image keyed(std::size_t key) {
  Image img(2, 3, {0.f, 0.5f, 1.f});
  img.pixel(0)[0] = float(key) / 255.f;
  return img;
}

HttpScorer::Options fast_options(int retries = 2) {
  HttpScorer::Options o;
  o.timeout = std::chrono::milliseconds(2000);
  o.retries = retries;
  o.backoff = std::chrono::milliseconds(1);
  return o;
}

const std::vector<std::string> kLabels{"cat", "dog"};

}  // namespace

TEST(HttpScorer, FixtureRoundTripsBitExactly) {
  TestServer server;
  const HttpScorer scorer(server.url(), fast_options());
  std::vector<Image> batch;
  for (std::size_t k = 0; k < kFixture.size(); ++k) batch.push_back(keyed(k));
  const ScoreMatrix m = scorer.score_batch(batch, kLabels);
  ASSERT_EQ(m.rows, kFixture.size());
  ASSERT_EQ(m.cols, 2u);
  for (std::size_t k = 0; k < kFixture.size(); ++k) {
    const double expected = std::strtod(kFixture[k].c_str(), nullptr);
    EXPECT_EQ(m(k, 0), expected) << kFixture[k];
    EXPECT_EQ(m(k, 1), expected) << kFixture[k];
  }
}

TEST(HttpScorer, RequestCarriesPixelsAndLabels) {
  json seen;
  TestServer server([&](const json& req, httplib::Response& res) {
    seen = req;
    res.set_content(TestServer::fixture_reply(req), "application/json");
  });
  const HttpScorer scorer(server.url() + "/", fast_options());
  const std::vector<Image> batch{keyed(1), keyed(2)};
  scorer.score_batch(batch, kLabels);
  EXPECT_EQ(seen["height"], 2);
  EXPECT_EQ(seen["width"], 3);
  EXPECT_EQ(seen["labels"], json(kLabels));
  ASSERT_EQ(seen["images"].size(), 2u);
  ASSERT_EQ(seen["images"][0].size(), 6u);
  EXPECT_EQ(seen["images"][1][0][0].get<double>(), double(2.f / 255.f));
  EXPECT_EQ(seen["images"][0][5], json({0.0, 0.5, 1.0}));
  EXPECT_TRUE(seen["id"].is_string());
}

TEST(HttpScorer, HealthListsLabels) {
  TestServer server;
  const HttpScorer scorer(server.url(), fast_options());
  EXPECT_EQ(scorer.health(), kLabels);
  EXPECT_EQ(scorer.identity(), server.url());
}

TEST(HttpScorer, ServerErrorsAreRetried) {
  std::atomic<int> calls{0};
  TestServer server([&](const json& req, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(TestServer::fixture_reply(req), "application/json");
  });
  const std::vector<Image> batch{keyed(0)};
  const HttpScorer patient(server.url(), fast_options(2));
  EXPECT_EQ(patient.score_batch(batch, kLabels)(0, 0), 0.1);
  EXPECT_EQ(calls.load(), 3);

  calls = 0;
  const HttpScorer impatient(server.url(), fast_options(1));
  EXPECT_THROW(impatient.score_batch(batch, kLabels), TransportError);
  EXPECT_EQ(calls.load(), 2);
}

TEST(HttpScorer, ClientErrorsFailImmediately) {
  int status = 400;
  std::atomic<int> calls{0};
  TestServer server([&](const json&, httplib::Response& res) {
    ++calls;
    res.status = status;
    res.set_content("nope", "text/plain");
  });
  const HttpScorer scorer(server.url(), fast_options(3));
  const std::vector<Image> batch{keyed(0)};
  EXPECT_THROW(scorer.score_batch(batch, kLabels), ValidationError);
  EXPECT_EQ(calls.load(), 1);
  status = 422;
  EXPECT_THROW(scorer.score_batch(batch, kLabels), ConfigError);
}

TEST(HttpScorer, BadResponsesAreRejected) {
  std::string body;
  TestServer server([&](const json&, httplib::Response& res) { res.set_content(body, "application/json"); });
  const HttpScorer scorer(server.url(), fast_options());
  const std::vector<Image> batch{keyed(0)};
  for (const std::string& b : {std::string(R"({"id":"other","scores":[[0.5,0.5]]})"),
                               std::string(R"({"id":"req-1","scores":[[0.5,1.5]]})"),
                               std::string(R"({"id":"req-2","scores":[[0.5]]})"),
                               std::string(R"({"id":"req-3","scores":[[0.5,0.5],[0.1,0.1]]})"),
                               std::string(R"({"id":"req-4","scores":[[0.5,"0.5"]]})"),
                               std::string("not json")}) {
    body = b;
    EXPECT_THROW(scorer.score_batch(batch, kLabels), ValidationError) << b;
  }
}

TEST(HttpScorer, DecodeResponseDirectly) {
  const auto m = HttpScorer::decode_response(R"({"id":"a","scores":[[0.25],[1]]})", "a", 2, 1);
  EXPECT_EQ(m(0, 0), 0.25);
  EXPECT_EQ(m(1, 0), 1.0);
  EXPECT_THROW(HttpScorer::decode_response(R"({"id":"a","scores":[[-0.01]]})", "a", 1, 1), ValidationError);
  EXPECT_THROW(HttpScorer::decode_response(R"({"scores":[[0.5]]})", "a", 1, 1), ValidationError);
}

TEST(HttpScorer, EncodeRejectsRaggedBatch) {
  const std::vector<Image> batch{Image(2, 2), Image(2, 3)};
  EXPECT_THROW(HttpScorer::encode_request("x", batch, kLabels), ValidationError);
  EXPECT_THROW(HttpScorer::encode_request("x", {}, kLabels), ValidationError);
}

TEST(HttpScorer, UnreachableServerIsATransportError) {
  const int port = closed_port();
  const HttpScorer scorer("http://127.0.0.1:" + std::to_string(port), fast_options(1));
  const std::vector<Image> batch{keyed(0)};
  EXPECT_THROW(scorer.score_batch(batch, kLabels), TransportError);
  EXPECT_THROW(scorer.health(), TransportError);
}

TEST(HttpScorer, BadUrls) {
  EXPECT_THROW(HttpScorer("https://example.com"), ConfigError);
  EXPECT_THROW(HttpScorer("localhost:8000"), ConfigError);
  EXPECT_THROW(HttpScorer("http://"), ConfigError);
}

TEST(HttpScorer, ConcurrentCallersGetTheirOwnRows) {
  TestServer server;
  const HttpScorer scorer(server.url(), fast_options());
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int rep = 0; rep < 10; ++rep) {
        const std::vector<Image> batch{keyed(t), keyed(t + 1)};
        const ScoreMatrix m = scorer.score_batch(batch, kLabels);
        for (std::size_t r = 0; r < 2; ++r) {
          const double expected = std::strtod(kFixture[(t + r) % kFixture.size()].c_str(), nullptr);
          if (m(r, 1) != expected) ++mismatches;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_EQ(server.requests.load(), 80);
}
