#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "llmcast/llm_http.hpp"
#include "support/synthetic_world.hpp"

using namespace llmcast;

namespace {

/// Virtual time: sleeping advances the clock instantly.
class FakeClock final : public Clock {
  public:
    time_point now() override { return t_; }
    void sleep_until(time_point t) override {
        if (t > t_) t_ = t;
        sleeps_.push_back(t);
    }
    void advance(duration d) { t_ += d; }
    [[nodiscard]] const std::vector<time_point>& sleeps() const { return sleeps_; }

  private:
    time_point t_{};
    std::vector<time_point> sleeps_;
};

}  // namespace

TEST(Request, HashIsCanonicalAndSensitive) {
    const CompletionRequest a{"hello", 1024, 0.0, "gpt-4"};
    EXPECT_EQ(request_hash(a), request_hash(completion_request_from_json(nlohmann::json::parse(to_json(a).dump()))));
    EXPECT_EQ(to_json(a).dump(), R"({"max_output_tokens":1024,"model":"gpt-4","prompt":"hello","temperature":0.0})");
    auto b = a;
    b.prompt = "hello!";
    EXPECT_NE(request_hash(a), request_hash(b));
    b = a;
    b.model = "other";
    EXPECT_NE(request_hash(a), request_hash(b));
    b = a;
    b.max_output_tokens = 10;
    EXPECT_NE(request_hash(a), request_hash(b));
    EXPECT_THROW((CompletionRequest{"", 10, 0.0, "m"}.validate()), PreconditionError);
}

TEST(Replay, RecordThenReplay) {
    const auto dir = synth::temp_dir("replay");
    int upstream_calls = 0;
    FunctionClient upstream([&](const CompletionRequest& r) {
        ++upstream_calls;
        return "reply to " + r.prompt;
    });
    RecordingClient rec(ReplayStore(dir), upstream, [] { return std::string("2023-01-01T00:00:00Z"); });
    EXPECT_EQ(rec.complete({"p1"}), "reply to p1");
    EXPECT_EQ(rec.complete({"p1"}), "reply to p1");
    EXPECT_EQ(upstream_calls, 1);

    const CompletionRequest req{"p1"};
    const auto entry = nlohmann::json::parse(read_file(dir / (request_hash(req) + ".json")));
    EXPECT_EQ(entry.at("reply"), "reply to p1");
    EXPECT_EQ(entry.at("recorded_at"), "2023-01-01T00:00:00Z");
    EXPECT_EQ(entry.at("request").at("prompt"), "p1");

    ReplayClient replay{ReplayStore(dir)};
    EXPECT_EQ(replay.complete({"p1"}), "reply to p1");
    try {
        replay.complete({"p2"});
        FAIL();
    } catch (const ReplayMiss& e) {
        EXPECT_EQ(e.hash(), request_hash(CompletionRequest{"p2"}));
    }
}

TEST(Replay, CorruptEntryIsDataError) {
    const auto dir = synth::temp_dir("replay_corrupt");
    const CompletionRequest req{"p"};
    write_file_atomic(dir / (request_hash(req) + ".json"), "{not json");
    ReplayClient replay{ReplayStore(dir)};
    EXPECT_THROW(replay.complete(req), DataError);
}

TEST(RateLimiter, SpacingBoundsEveryWindow) {
    FakeClock clock;
    RateLimiter limiter(30.0, clock);  // one grant per 2 s
    std::vector<Clock::time_point> grants;
    for (int i = 0; i < 100; ++i) {
        grants.push_back(limiter.acquire());
        if (i % 7 == 0) clock.advance(std::chrono::milliseconds(300));
    }
    for (std::size_t i = 1; i < grants.size(); ++i) EXPECT_GE(grants[i] - grants[i - 1], std::chrono::seconds(2));
    for (std::size_t i = 0; i < grants.size(); ++i) {
        std::size_t in_window = 0;
        for (std::size_t j = i; j < grants.size() && grants[j] - grants[i] < std::chrono::seconds(60); ++j) ++in_window;
        EXPECT_LE(in_window, 31u);
    }
}

TEST(RateLimiter, IdleTimeIsNotBanked) {
    FakeClock clock;
    RateLimiter limiter(60.0, clock);
    limiter.acquire();
    clock.advance(std::chrono::minutes(10));
    const auto a = limiter.acquire();
    const auto b = limiter.acquire();
    EXPECT_EQ(b - a, std::chrono::seconds(1));
}

TEST(HttpClient, SplitUrl) {
    EXPECT_EQ(split_url("https://api.example.com/v1/chat/completions"),
              (std::pair<std::string, std::string>{"https://api.example.com", "/v1/chat/completions"}));
    EXPECT_EQ(split_url("http://127.0.0.1:8080/x"), (std::pair<std::string, std::string>{"http://127.0.0.1:8080", "/x"}));
}

namespace {

struct StubServer {
    httplib::Server svr;
    int port = 0;
    std::thread thread;
    std::vector<int> statuses;  // served in order, then 200
    std::atomic<int> hits{0};
    std::string auth;
    std::string body;

    StubServer() {
        svr.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int i = hits++;
            auth = req.get_header_value("Authorization");
            body = req.body;
            const int status = i < static_cast<int>(statuses.size()) ? statuses[static_cast<std::size_t>(i)] : 200;
            res.status = status;
            if (status == 200) {
                res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Summary: s\nKeywords: k"}}]})",
                                "application/json");
            } else {
                res.set_content("{}", "application/json");
            }
        });
        port = svr.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }
    ~StubServer() {
        svr.stop();
        thread.join();
    }
    [[nodiscard]] HttpClientConfig config() const {
        HttpClientConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        c.rpm = 0;
        c.timeout_seconds = 5;
        c.api_key_env = "LLMCAST_TEST_KEY";
        c.backoff_base = std::chrono::milliseconds(100);
        return c;
    }
};

}  // namespace

TEST(HttpClient, RetriesTransientFailuresWithBackoff) {
    StubServer server;
    server.statuses = {429, 503};
    ::setenv("LLMCAST_TEST_KEY", "sk-test", 1);
    FakeClock clock;
    HttpLlmClient client(server.config(), clock);
    EXPECT_EQ(client.complete({"hi", 64, 0.0, "gpt-4"}), "Summary: s\nKeywords: k");
    EXPECT_EQ(server.hits.load(), 3);
    EXPECT_EQ(server.auth, "Bearer sk-test");
    const auto body = nlohmann::json::parse(server.body);
    EXPECT_EQ(body.at("messages").at(0).at("content"), "hi");
    EXPECT_EQ(body.at("max_tokens"), 64);
    // Backoff doubles: 100 ms then 200 ms.
    ASSERT_EQ(clock.sleeps().size(), 2u);
    EXPECT_EQ(clock.sleeps()[0].time_since_epoch(), std::chrono::milliseconds(100));
    EXPECT_EQ(clock.sleeps()[1].time_since_epoch(), std::chrono::milliseconds(300));
}

TEST(HttpClient, ClientErrorsAreNotRetried) {
    StubServer server;
    server.statuses = {400};
    FakeClock clock;
    HttpLlmClient client(server.config(), clock);
    EXPECT_THROW(client.complete({"hi"}), TransportError);
    EXPECT_EQ(server.hits.load(), 1);
}

TEST(HttpClient, GivesUpAfterMaxTries) {
    StubServer server;
    server.statuses = {500, 500, 500, 500, 500, 500};
    FakeClock clock;
    auto cfg = server.config();
    cfg.max_tries = 4;
    HttpLlmClient client(cfg, clock);
    try {
        client.complete({"hi"});
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(exit_code(e), 3);
    }
    EXPECT_EQ(server.hits.load(), 4);
}

TEST(HttpClient, MalformedBody) {
    EXPECT_THROW(HttpLlmClient::extract_content("{}"), TransportError);
    EXPECT_EQ(HttpLlmClient::extract_content(R"({"choices":[{"message":{"content":"x"}}]})"), "x");
}
