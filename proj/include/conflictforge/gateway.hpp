#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "conflictforge/detail/sha256.hpp"
#include "conflictforge/errors.hpp"

namespace conflictforge {

struct DecodeParams {
    double temperature = 0.0;
    int max_tokens = 512;
};

struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model;
    DecodeParams decode;
    std::string auth_env_var;
    int requests_per_minute = 60;
    int max_in_flight = 4;

    void validate() const {
        if (decode.temperature < 0) throw ConfigError("temperature must be >= 0");
        if (decode.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
        if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
        if (requests_per_minute < 1) throw ConfigError("requests_per_minute must be >= 1");
    }
};

struct Message {
    std::string role;  // system | user | assistant
    std::string content;
};

struct CompletionRequest {
    std::vector<Message> messages;
    std::optional<DecodeParams> decode_override;

    static CompletionRequest user(std::string content) {
        return CompletionRequest{{Message{"user", std::move(content)}}, std::nullopt};
    }

    void validate() const {
        if (messages.empty()) throw ConfigError("request needs at least one message");
        if (messages.back().role != "user") throw ConfigError("final message must be from user");
    }
};

enum class BackendKind { Live, Scripted, CacheHit };

struct CompletionRecord {
    std::string digest;  // hex sha-256 over (model, messages, decode)
    std::string response_text;
    BackendKind backend = BackendKind::Scripted;
    long long latency_ms = 0;
};

inline DecodeParams effective_decode(const EndpointConfig& cfg, const CompletionRequest& req) {
    return req.decode_override.value_or(cfg.decode);
}

inline std::string cache_key(const std::string& model, const CompletionRequest& req,
                             const DecodeParams& decode) {
    nlohmann::json j;
    j["model"] = model;
    j["temperature"] = decode.temperature;
    j["max_tokens"] = decode.max_tokens;
    auto msgs = nlohmann::json::array();
    for (auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    j["messages"] = msgs;
    return detail::sha256_hex(j.dump());
}

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete_text(const EndpointConfig& cfg, const CompletionRequest& req) = 0;
    virtual BackendKind kind() const = 0;
};

/// Offline backend for tests and --mock runs. Exhaustive: an unscripted
/// prompt raises UnscriptedPrompt instead of fabricating text.
class ScriptedBackend : public ChatBackend {
public:
    void script(const std::string& user_prompt, const std::string& response) {
        responses_[user_prompt] = response;
    }

    bool has(const std::string& user_prompt) const { return responses_.count(user_prompt) > 0; }

    std::string complete_text(const EndpointConfig&, const CompletionRequest& req) override {
        const std::string& prompt = req.messages.back().content;
        auto it = responses_.find(prompt);
        if (it == responses_.end())
            throw UnscriptedPrompt(prompt.substr(0, 120));
        return it->second;
    }

    BackendKind kind() const override { return BackendKind::Scripted; }

    void save(const std::string& path) const {
        nlohmann::json j(responses_);
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }

    static std::shared_ptr<ScriptedBackend> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open script file: " + path);
        nlohmann::json j;
        in >> j;
        auto b = std::make_shared<ScriptedBackend>();
        for (auto it = j.begin(); it != j.end(); ++it)
            b->responses_[it.key()] = it.value().get<std::string>();
        return b;
    }

private:
    std::map<std::string, std::string> responses_;
};

namespace detail {

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire() {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        { std::lock_guard lk(m_); ++count_; }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    int count_;
};

/// Sliding one-minute window limiter with injectable clock for tests.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RateLimiter(int per_minute, Clock clock = [] { return std::chrono::steady_clock::now(); },
                Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
        : per_minute_(per_minute), clock_(std::move(clock)), sleeper_(std::move(sleeper)) {}

    void admit() {
        for (;;) {
            std::chrono::milliseconds wait{0};
            {
                std::lock_guard lk(m_);
                auto now = clock_();
                while (!stamps_.empty() && now - stamps_.front() >= std::chrono::minutes(1))
                    stamps_.pop_front();
                if (static_cast<int>(stamps_.size()) < per_minute_) {
                    stamps_.push_back(now);
                    return;
                }
                wait = std::chrono::duration_cast<std::chrono::milliseconds>(
                           stamps_.front() + std::chrono::minutes(1) - now) +
                       std::chrono::milliseconds(1);
            }
            sleeper_(wait);
        }
    }

private:
    int per_minute_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex m_;
    std::deque<std::chrono::steady_clock::time_point> stamps_;
};

}  // namespace detail

/// Uniform client: content-addressed cache in front of a live or scripted
/// backend, bounded in-flight live calls, per-minute throttle, retries.
class Gateway {
public:
    Gateway(std::filesystem::path cache_dir, std::shared_ptr<ChatBackend> backend,
            const EndpointConfig& cfg)
        : cache_dir_(std::move(cache_dir)),
          backend_(std::move(backend)),
          cfg_(cfg),
          in_flight_(cfg.max_in_flight),
          limiter_(cfg.requests_per_minute) {
        cfg_.validate();
        std::filesystem::create_directories(cache_dir_);
    }

    const EndpointConfig& config() const { return cfg_; }

    size_t live_calls() const { return live_calls_; }

    CompletionRecord complete(const CompletionRequest& req) {
        req.validate();
        auto decode = effective_decode(cfg_, req);
        std::string digest = cache_key(cfg_.model, req, decode);
        auto path = cache_path(digest);

        {
            std::lock_guard lk(cache_mutex_);
            if (std::filesystem::exists(path)) {
                std::ifstream in(path);
                nlohmann::json j;
                in >> j;
                return CompletionRecord{digest, j.at("response_text").get<std::string>(),
                                        BackendKind::CacheHit,
                                        j.value("latency_ms", 0LL)};
            }
        }

        in_flight_.acquire();
        std::string response;
        long long latency = 0;
        try {
            if (backend_->kind() == BackendKind::Live) limiter_.admit();
            auto t0 = std::chrono::steady_clock::now();
            response = call_with_retries(req);
            latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            ++live_calls_;
        } catch (...) {
            in_flight_.release();
            throw;
        }
        in_flight_.release();

        if (response.empty()) throw EmptyResponse("endpoint " + cfg_.name);

        CompletionRecord rec{digest, response, backend_->kind(), latency};
        {
            std::lock_guard lk(cache_mutex_);
            std::filesystem::create_directories(path.parent_path());
            nlohmann::json j;
            j["digest"] = digest;
            j["model"] = cfg_.model;
            j["response_text"] = response;
            j["latency_ms"] = latency;
            std::ofstream out(path);
            out << j.dump(2) << "\n";
        }
        return rec;
    }

private:
    std::filesystem::path cache_path(const std::string& digest) const {
        return cache_dir_ / digest.substr(0, 2) / (digest + ".json");
    }

    std::string call_with_retries(const CompletionRequest& req) {
        constexpr int kAttempts = 3;
        std::chrono::milliseconds backoff{250};
        for (int attempt = 1;; ++attempt) {
            try {
                return backend_->complete_text(cfg_, req);
            } catch (const TransportError&) {
                if (attempt == kAttempts) throw;
            } catch (const RateLimited&) {
                if (attempt == kAttempts) throw;
            }
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }

    std::filesystem::path cache_dir_;
    std::shared_ptr<ChatBackend> backend_;
    EndpointConfig cfg_;
    detail::Semaphore in_flight_;
    detail::RateLimiter limiter_;
    std::mutex cache_mutex_;
    std::atomic<size_t> live_calls_{0};
};

}  // namespace conflictforge
