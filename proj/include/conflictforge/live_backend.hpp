#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "conflictforge/errors.hpp"
#include "conflictforge/gateway.hpp"

namespace conflictforge {

/// OpenAI-compatible chat-completions client: POST <base_url>/chat/completions,
/// bearer auth from the configured environment variable.
class LiveBackend : public ChatBackend {
public:
    std::string complete_text(const EndpointConfig& cfg, const CompletionRequest& req) override {
        const char* key = nullptr;
        if (!cfg.auth_env_var.empty()) {
            key = std::getenv(cfg.auth_env_var.c_str());
            if (!key) throw AuthMissing(cfg.auth_env_var);
        }

        auto decode = effective_decode(cfg, req);
        nlohmann::json body;
        body["model"] = cfg.model;
        body["temperature"] = decode.temperature;
        body["max_tokens"] = decode.max_tokens;
        auto msgs = nlohmann::json::array();
        for (auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = msgs;

        auto [root, prefix] = split_url(cfg.base_url);
        httplib::Client client(root);
        client.set_connection_timeout(15);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) throw TransportError(cfg.base_url + ": " + httplib::to_string(res.error()));
        if (res->status == 429) {
            std::string after = res->get_header_value("Retry-After");
            throw RateLimited(after.empty() ? "retry later" : after);
        }
        if (res->status < 200 || res->status >= 300)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + cfg.base_url);

        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
            throw TransportError("malformed completion payload from " + cfg.base_url);
        std::string content = j["choices"][0]["message"]["content"].get<std::string>();
        if (content.empty()) throw EmptyResponse("endpoint " + cfg.name);
        return content;
    }

    BackendKind kind() const override { return BackendKind::Live; }

private:
    // "http://host:port/v1" -> ("http://host:port", "/v1")
    static std::pair<std::string, std::string> split_url(const std::string& url) {
        auto scheme_end = url.find("://");
        size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) return {url, ""};
        std::string prefix = url.substr(path_start);
        if (prefix == "/") prefix.clear();
        return {url.substr(0, path_start), prefix};
    }
};

}  // namespace conflictforge
