#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "llmcast/error.hpp"
#include "llmcast/hash.hpp"
#include "llmcast/io.hpp"

namespace llmcast {

struct CompletionRequest {
    std::string prompt;
    int max_output_tokens = 1024;
    double temperature = 0.0;
    std::string model = "gpt-4";

    void validate() const {
        if (prompt.empty()) throw PreconditionError("CompletionRequest: empty prompt");
        if (max_output_tokens < 1) throw PreconditionError("CompletionRequest: max_output_tokens < 1");
    }
};

/// Canonical form: object keys sorted, so the dump is stable.
inline nlohmann::json to_json(const CompletionRequest& r) {
    return {{"max_output_tokens", r.max_output_tokens},
            {"model", r.model},
            {"prompt", r.prompt},
            {"temperature", r.temperature}};
}

inline CompletionRequest completion_request_from_json(const nlohmann::json& j) {
    return {j.at("prompt").get<std::string>(), j.at("max_output_tokens").get<int>(),
            j.at("temperature").get<double>(), j.at("model").get<std::string>()};
}

inline std::string request_hash(const CompletionRequest& r) { return sha256_hex(to_json(r).dump()); }

class LlmClient {
  public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Wraps a callable; the usual way to script replies in tests and fixture generation.
class FunctionClient final : public LlmClient {
  public:
    explicit FunctionClient(std::function<std::string(const CompletionRequest&)> fn) : fn_(std::move(fn)) {}
    std::string complete(const CompletionRequest& request) override { return fn_(request); }

  private:
    std::function<std::string(const CompletionRequest&)> fn_;
};

/// Counts calls forwarded to the wrapped client.
class CountingClient final : public LlmClient {
  public:
    explicit CountingClient(LlmClient& inner) : inner_(inner) {}
    std::string complete(const CompletionRequest& request) override {
        ++calls_;
        return inner_.complete(request);
    }
    [[nodiscard]] int calls() const { return calls_.load(); }

  private:
    LlmClient& inner_;
    std::atomic<int> calls_{0};
};

// ---------------------------------------------------------------------------
// Time and rate limiting
// ---------------------------------------------------------------------------

class Clock {
  public:
    using duration = std::chrono::nanoseconds;
    using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;
    void sleep_for(duration d) { sleep_until(now() + d); }
};

class SteadyClock final : public Clock {
  public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_until(time_point t) override { std::this_thread::sleep_until(t); }

    static SteadyClock& instance() {
        static SteadyClock clock;
        return clock;
    }
};

/// Spacing limiter: consecutive grants are at least 60s/rpm apart, so any
/// 60-second window holds at most rpm + 1 grants. Thread-safe.
class RateLimiter {
  public:
    explicit RateLimiter(double requests_per_minute, Clock& clock = SteadyClock::instance())
        : clock_(clock),
          interval_(requests_per_minute > 0
                        ? std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(60.0 / requests_per_minute))
                        : Clock::duration::zero()) {}

    /// Blocks until the caller's slot; returns the granted slot time.
    Clock::time_point acquire() {
        Clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = clock_.now();
            slot = (!started_ || next_ < now) ? now : next_;
            next_ = slot + interval_;
            started_ = true;
        }
        if (slot > clock_.now()) clock_.sleep_until(slot);
        return slot;
    }

  private:
    Clock& clock_;
    Clock::duration interval_;
    std::mutex mutex_;
    Clock::time_point next_{};
    bool started_ = false;
};

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

/// Directory of {hash}.json files holding {request, reply, recorded_at}.
class ReplayStore {
  public:
    explicit ReplayStore(fs::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] const fs::path& dir() const { return dir_; }
    [[nodiscard]] fs::path path_for(const std::string& hash) const { return dir_ / (hash + ".json"); }

    std::optional<std::string> lookup(const CompletionRequest& request) const {
        const auto path = path_for(request_hash(request));
        std::error_code ec;
        if (!fs::exists(path, ec)) return std::nullopt;
        try {
            return nlohmann::json::parse(read_file(path)).at("reply").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corrupt replay entry " + path.string() + ": " + e.what());
        }
    }

    void record(const CompletionRequest& request, const std::string& reply, const std::string& recorded_at) const {
        const nlohmann::json entry{{"request", to_json(request)}, {"reply", reply}, {"recorded_at", recorded_at}};
        write_file_atomic(path_for(request_hash(request)), entry.dump(2) + "\n");
    }

  private:
    fs::path dir_;
};

/// Serves recorded replies only; a miss is a typed error naming the hash.
class ReplayClient final : public LlmClient {
  public:
    explicit ReplayClient(ReplayStore store) : store_(std::move(store)) {}

    std::string complete(const CompletionRequest& request) override {
        request.validate();
        if (auto reply = store_.lookup(request)) return *reply;
        throw ReplayMiss(request_hash(request));
    }

  private:
    ReplayStore store_;
};

inline std::string utc_timestamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Serves recorded replies; on a miss asks `upstream` and records the answer.
class RecordingClient final : public LlmClient {
  public:
    RecordingClient(ReplayStore store, LlmClient& upstream, std::function<std::string()> timestamp = utc_timestamp)
        : store_(std::move(store)), upstream_(upstream), timestamp_(std::move(timestamp)) {}

    std::string complete(const CompletionRequest& request) override {
        request.validate();
        std::lock_guard lock(mutex_);
        if (auto reply = store_.lookup(request)) return *reply;
        std::string reply = upstream_.complete(request);
        store_.record(request, reply, timestamp_());
        return reply;
    }

  private:
    ReplayStore store_;
    LlmClient& upstream_;
    std::function<std::string()> timestamp_;
    std::mutex mutex_;
};

}  // namespace llmcast
