/// @file gateway.hpp
/// @brief Completion requests, the on-disk response cache, providers and the
/// retrying, rate-limited gateway in front of them.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dtg {

struct LLMRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 512;
    std::optional<std::vector<std::string>> stop;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
    nlohmann::json to_json() const;
    static LLMRequest from_json(const nlohmann::json& j);
};

enum class FinishReason { Stop, Length, Other };

std::string_view to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct LLMResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    bool cached = false;
    std::optional<double> latency_ms;

    nlohmann::json to_json() const;
    static LLMResponse from_json(const nlohmann::json& j);
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 over a canonical encoding of every field that influences the output.
std::string cache_key(const LLMRequest& req);

/// Per-request side information a provider may use. Only the mock reads it.
struct RequestContext {
    std::string example_id;
    /// What an ideal model would answer given the reference.
    std::optional<std::string> reference_echo;
    /// The same shape, answering with the candidate text.
    std::optional<std::string> candidate_echo;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual LLMResponse complete(const LLMRequest& req, const RequestContext& ctx) = 0;
    virtual std::string name() const = 0;
};

enum class MockFallback { EchoReference, EchoCandidate, Fail };

MockFallback parse_mock_fallback(std::string_view s);

/// Deterministic provider. Scripted entries are keyed by cache_key(req) or by
/// sha256_hex(prompt); unscripted requests take the fallback. Output longer
/// than max_tokens whitespace tokens is cut and reported as Length.
class MockProvider : public Provider {
public:
    MockProvider(std::map<std::string, std::string> script, MockFallback fallback);

    /// Reads a {"<digest>": "<completion>", ...} object.
    static std::map<std::string, std::string> load_script(const std::filesystem::path& path);

    LLMResponse complete(const LLMRequest& req, const RequestContext& ctx) override;
    std::string name() const override { return "mock"; }

    std::uint64_t calls() const { return calls_.load(); }

private:
    std::map<std::string, std::string> script_;
    MockFallback fallback_;
    std::atomic<std::uint64_t> calls_{0};
};

struct HttpProviderConfig {
    /// e.g. "https://api.openai.com/v1"; "/completions" is appended.
    std::string api_base = "https://api.openai.com/v1";
    std::string api_key;
    /// Wrap the prompt as a single user message for chat-only endpoints.
    bool chat = false;
    std::chrono::seconds timeout{120};

    /// Reads DTG_API_BASE and DTG_API_KEY (falling back to OPENAI_API_KEY).
    static HttpProviderConfig from_env();
};

/// OpenAI-compatible completion endpoint over HTTP(S).
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig cfg);

    LLMResponse complete(const LLMRequest& req, const RequestContext& ctx) override;
    std::string name() const override { return cfg_.chat ? "openai-chat" : "openai"; }

private:
    HttpProviderConfig cfg_;
    std::string origin_;  // scheme://host[:port]
    std::string path_prefix_;
};

/// One immutable JSON file per request digest. Writers go through a temporary
/// file and rename, so readers see either nothing or a complete record.
class FileCache {
public:
    explicit FileCache(std::filesystem::path root);

    std::optional<LLMResponse> get(const std::string& key, const LLMRequest& req) const;
    /// Does nothing when the key already exists.
    void put(const std::string& key, const LLMRequest& req, const LLMResponse& resp);

    std::filesystem::path path_for(const std::string& key) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::mutex& key_mutex(const std::string& key);

    std::filesystem::path root_;
    std::mutex table_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
};

/// Token bucket; 0 requests per minute disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute, double burst = 1.0);
    void acquire();

private:
    double rate_per_sec_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30000};
};

/// Cache, rate limiter and retries around a provider. Safe for concurrent use.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<Provider> provider, std::optional<std::filesystem::path> cache_dir,
            RetryPolicy retry = {}, double requests_per_minute = 0.0);

    LLMResponse complete(const LLMRequest& req, const RequestContext& ctx = {});

    std::uint64_t provider_calls() const { return provider_calls_.load(); }
    std::uint64_t cache_hits() const { return cache_hits_.load(); }
    const Provider& provider() const { return *provider_; }

    /// Replaces the backoff sleep; tests use this to avoid waiting.
    void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

private:
    std::shared_ptr<Provider> provider_;
    std::unique_ptr<FileCache> cache_;
    RetryPolicy retry_;
    RateLimiter limiter_;
    Sleeper sleeper_;
    std::atomic<std::uint64_t> provider_calls_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace dtg
