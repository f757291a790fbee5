#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "llmcast/llm_client.hpp"

namespace llmcast {

struct HttpClientConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4";
    double rpm = 60.0;
    int timeout_seconds = 120;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_tries = 5;
    std::chrono::milliseconds backoff_base{1000};
};

/// Splits "https://host:port/path" into ("https://host:port", "/path").
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw UsageError("endpoint URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// Chat-completions adapter: the whole prompt goes in one user message.
/// Retries 429/5xx and connection failures with exponential backoff.
class HttpLlmClient final : public LlmClient {
  public:
    explicit HttpLlmClient(HttpClientConfig config, Clock& clock = SteadyClock::instance())
        : config_(std::move(config)), clock_(clock), limiter_(config_.rpm, clock) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
        auto [base, path] = split_url(config_.endpoint);
        base_ = std::move(base);
        path_ = std::move(path);
    }

    std::string complete(const CompletionRequest& request) override {
        request.validate();
        const nlohmann::json body{{"model", request.model},
                                  {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
                                  {"temperature", request.temperature},
                                  {"max_tokens", request.max_output_tokens}};
        const std::string payload = body.dump();
        auto delay = config_.backoff_base;
        std::string last_error;
        for (int attempt = 1; attempt <= config_.max_tries; ++attempt) {
            limiter_.acquire();
            httplib::Client cli(base_);
            cli.set_connection_timeout(config_.timeout_seconds);
            cli.set_read_timeout(config_.timeout_seconds);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = cli.Post(path_, headers, payload, "application/json");
            if (res && res->status == 200) return extract_content(res->body);
            if (res && res->status != 429 && res->status < 500) {
                throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
            }
            last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
            if (attempt < config_.max_tries) {
                clock_.sleep_for(delay);
                delay *= 2;
            }
        }
        throw TransportError("LLM request failed after " + std::to_string(config_.max_tries) + " tries: " + last_error);
    }

    static std::string extract_content(const std::string& body) {
        try {
            return nlohmann::json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed chat-completion response: ") + e.what());
        }
    }

  private:
    HttpClientConfig config_;
    Clock& clock_;
    RateLimiter limiter_;
    std::string api_key_;
    std::string base_;
    std::string path_;
};

}  // namespace llmcast
