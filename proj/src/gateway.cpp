#include "dtg/gateway.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <cctype>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include "dtg/errors.hpp"
#include "dtg/text.hpp"

namespace dtg {

using json = nlohmann::json;

namespace {

std::string exact_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string getenv_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

void LLMRequest::validate() const {
    if (model.empty()) throw ConfigError("request model is empty");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

json LLMRequest::to_json() const {
    json j = {{"model", model},         {"prompt", prompt},         {"temperature", temperature},
              {"top_p", top_p},         {"max_tokens", max_tokens}};
    j["stop"] = stop ? json(*stop) : json(nullptr);
    return j;
}

LLMRequest LLMRequest::from_json(const json& j) {
    LLMRequest r;
    r.model = j.at("model").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.temperature = j.value("temperature", 0.0);
    r.top_p = j.value("top_p", 1.0);
    r.max_tokens = j.value("max_tokens", 512);
    if (j.contains("stop") && j["stop"].is_array()) r.stop = j["stop"].get<std::vector<std::string>>();
    return r;
}

std::string_view to_string(FinishReason r) {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Other: return "other";
    }
    return "other";
}

FinishReason parse_finish_reason(std::string_view s) {
    if (s == "stop") return FinishReason::Stop;
    if (s == "length") return FinishReason::Length;
    return FinishReason::Other;
}

json LLMResponse::to_json() const {
    json j = {{"text", text}, {"finish_reason", to_string(finish_reason)}};
    if (latency_ms) j["latency_ms"] = *latency_ms;
    return j;
}

LLMResponse LLMResponse::from_json(const json& j) {
    LLMResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = parse_finish_reason(j.value("finish_reason", std::string("stop")));
    if (j.contains("latency_ms") && j["latency_ms"].is_number())
        r.latency_ms = j["latency_ms"].get<double>();
    return r;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string cache_key(const LLMRequest& req) {
    // Numbers are spelled out exactly so the key does not depend on how the
    // JSON writer formats doubles.
    json canon = {{"v", 1},
                  {"model", req.model},
                  {"prompt", req.prompt},
                  {"temperature", exact_double(req.temperature)},
                  {"top_p", exact_double(req.top_p)},
                  {"max_tokens", req.max_tokens}};
    canon["stop"] = req.stop ? json(*req.stop) : json(nullptr);
    return sha256_hex(canon.dump());
}

MockFallback parse_mock_fallback(std::string_view s) {
    if (s == "echo_reference") return MockFallback::EchoReference;
    if (s == "echo_candidate") return MockFallback::EchoCandidate;
    if (s == "fail") return MockFallback::Fail;
    throw ConfigError("unknown mock fallback: " + std::string(s));
}

MockProvider::MockProvider(std::map<std::string, std::string> script, MockFallback fallback)
    : script_(std::move(script)), fallback_(fallback) {}

std::map<std::string, std::string> MockProvider::load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("mock script " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("mock script must be a JSON object");
    return j.get<std::map<std::string, std::string>>();
}

LLMResponse MockProvider::complete(const LLMRequest& req, const RequestContext& ctx) {
    ++calls_;
    std::optional<std::string> out;
    if (auto it = script_.find(cache_key(req)); it != script_.end()) {
        out = it->second;
    } else if (auto it2 = script_.find(sha256_hex(req.prompt)); it2 != script_.end()) {
        out = it2->second;
    } else {
        switch (fallback_) {
            case MockFallback::EchoReference: out = ctx.reference_echo; break;
            case MockFallback::EchoCandidate: out = ctx.candidate_echo; break;
            case MockFallback::Fail: break;
        }
    }
    if (!out)
        throw UnscriptedRequestError("mock provider: unscripted request " + cache_key(req) +
                                     (ctx.example_id.empty() ? "" : " for example " + ctx.example_id));

    LLMResponse resp;
    resp.finish_reason = FinishReason::Stop;
    // Cut after max_tokens whitespace-separated words, keeping the original spacing.
    size_t words = 0, i = 0;
    const std::string& s = *out;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i == s.size()) break;
        if (words == static_cast<size_t>(req.max_tokens)) {
            resp.text = s.substr(0, i);
            while (!resp.text.empty() && std::isspace(static_cast<unsigned char>(resp.text.back())))
                resp.text.pop_back();
            resp.finish_reason = FinishReason::Length;
            return resp;
        }
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        ++words;
    }
    resp.text = s;
    return resp;
}

HttpProviderConfig HttpProviderConfig::from_env() {
    HttpProviderConfig c;
    c.api_base = getenv_or("DTG_API_BASE", c.api_base);
    c.api_key = getenv_or("DTG_API_KEY", getenv_or("OPENAI_API_KEY"));
    return c;
}

HttpProvider::HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    std::string base = cfg_.api_base;
    while (!base.empty() && base.back() == '/') base.pop_back();
    size_t scheme = base.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("api base must include a scheme: " + cfg_.api_base);
    size_t path = base.find('/', scheme + 3);
    origin_ = path == std::string::npos ? base : base.substr(0, path);
    path_prefix_ = path == std::string::npos ? "" : base.substr(path);
}

LLMResponse HttpProvider::complete(const LLMRequest& req, const RequestContext&) {
    json body = {{"model", req.model},
                 {"temperature", req.temperature},
                 {"top_p", req.top_p},
                 {"max_tokens", req.max_tokens}};
    if (req.stop) body["stop"] = *req.stop;
    std::string endpoint;
    if (cfg_.chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
        endpoint = path_prefix_ + "/chat/completions";
    } else {
        body["prompt"] = req.prompt;
        endpoint = path_prefix_ + "/completions";
    }

    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    auto start = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint, headers, body.dump(), "application/json");
    if (!res)
        throw TransientProviderError("transport error contacting " + origin_ + endpoint + ": " +
                                     httplib::to_string(res.error()));
    double latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const int status = res->status;
    std::string detail = "HTTP " + std::to_string(status) + " from " + endpoint;
    if (status == 401 || status == 403) throw AuthenticationError(detail + ": credential rejected");
    if (status == 429 || status >= 500) throw TransientProviderError(detail);
    if (status < 200 || status >= 300)
        throw NonTransientProviderError(detail + ": " + res->body.substr(0, 500));

    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw NonTransientProviderError(detail + ": response is not JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw NonTransientProviderError(detail + ": response has no choices");
    const json& choice = j["choices"][0];
    LLMResponse resp;
    if (cfg_.chat) {
        if (!choice.contains("message") || !choice["message"].contains("content"))
            throw NonTransientProviderError(detail + ": chat response without message content");
        resp.text = choice["message"]["content"].is_string()
                        ? choice["message"]["content"].get<std::string>()
                        : std::string();
    } else {
        if (!choice.contains("text") || !choice["text"].is_string())
            throw NonTransientProviderError(detail + ": completion response without text");
        resp.text = choice["text"].get<std::string>();
    }
    resp.finish_reason = choice.contains("finish_reason") && choice["finish_reason"].is_string()
                             ? parse_finish_reason(choice["finish_reason"].get<std::string>())
                             : FinishReason::Other;
    resp.latency_ms = latency;
    return resp;
}

FileCache::FileCache(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path FileCache::path_for(const std::string& key) const {
    return root_ / key.substr(0, 2) / (key + ".json");
}

std::mutex& FileCache::key_mutex(const std::string& key) {
    std::lock_guard<std::mutex> lock(table_mutex_);
    auto& slot = key_mutexes_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

std::optional<LLMResponse> FileCache::get(const std::string& key, const LLMRequest& req) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    json rec;
    try {
        in >> rec;
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!rec.contains("request") || !rec.contains("response")) return std::nullopt;
    if (LLMRequest::from_json(rec["request"]).to_json() != req.to_json()) return std::nullopt;
    LLMResponse r = LLMResponse::from_json(rec["response"]);
    r.cached = true;
    return r;
}

void FileCache::put(const std::string& key, const LLMRequest& req, const LLMResponse& resp) {
    std::lock_guard<std::mutex> lock(key_mutex(key));
    auto target = path_for(key);
    if (std::filesystem::exists(target)) return;
    std::filesystem::create_directories(target.parent_path());
    json rec = {{"request", req.to_json()}, {"response", resp.to_json()}, {"timestamp", utc_timestamp()}};
    rec["response"].erase("latency_ms");

    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
             << counter++;
    auto tmp = target.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
        out << rec.dump(1) << "\n";
        if (!out.flush()) throw std::runtime_error("cannot write cache file " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rate_per_sec_ <= 0) return;
    while (true) {
        std::chrono::duration<double> wait{};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            double elapsed = std::chrono::duration<double>(now - last_).count();
            tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
        }
        std::this_thread::sleep_for(wait);
    }
}

Gateway::Gateway(std::shared_ptr<Provider> provider,
                 std::optional<std::filesystem::path> cache_dir, RetryPolicy retry,
                 double requests_per_minute)
    : provider_(std::move(provider)),
      retry_(retry),
      limiter_(requests_per_minute),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (!provider_) throw ConfigError("gateway needs a provider");
    if (retry_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (cache_dir) cache_ = std::make_unique<FileCache>(*cache_dir);
}

LLMResponse Gateway::complete(const LLMRequest& req, const RequestContext& ctx) {
    req.validate();
    const std::string key = cache_key(req);
    if (cache_) {
        if (auto hit = cache_->get(key, req)) {
            ++cache_hits_;
            return *hit;
        }
    }

    std::chrono::milliseconds backoff = retry_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        limiter_.acquire();
        try {
            ++provider_calls_;
            LLMResponse resp = provider_->complete(req, ctx);
            resp.cached = false;
            if (cache_) cache_->put(key, req, resp);
            return resp;
        } catch (const TransientProviderError& e) {
            last_error = e.what();
            if (attempt == retry_.max_attempts) break;
            sleeper_(backoff);
            auto next = std::chrono::milliseconds(
                static_cast<long long>(std::llround(backoff.count() * retry_.multiplier)));
            backoff = std::min(next, retry_.max_backoff);
        }
    }
    throw RetriesExhaustedError("gave up after " + std::to_string(retry_.max_attempts) +
                                " attempts: " + last_error);
}

}  // namespace dtg
