#pragma once

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "conflictforge/filters.hpp"

namespace conflictforge {

/// Remote three-way classifier: POST {premise, hypothesis}, response
/// {"entail": p0, "neutral": p1, "contradict": p2}. Label is the argmax.
class RemoteJudge : public EntailmentJudge {
public:
    explicit RemoteJudge(std::string base_url, std::string path = "/nli")
        : base_url_(std::move(base_url)), path_(std::move(path)) {}

    EntailmentVerdict entails(const std::string& premise, const std::string& hypothesis) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(15);
        client.set_read_timeout(60);
        nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
        auto res = client.Post(path_, body.dump(), "application/json");
        if (!res) throw JudgeUnavailable(base_url_ + ": " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw JudgeUnavailable("HTTP " + std::to_string(res->status));
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("entail") || !j.contains("neutral") ||
            !j.contains("contradict"))
            throw MalformedJudgeOutput(res->body.substr(0, 120));
        double pe = j["entail"].get<double>();
        double pn = j["neutral"].get<double>();
        double pc = j["contradict"].get<double>();
        EntailmentVerdict v{premise, hypothesis, NliLabel::Entail, pe};
        if (pn > v.score) v = {premise, hypothesis, NliLabel::Neutral, pn};
        if (pc > v.score) v = {premise, hypothesis, NliLabel::Contradict, pc};
        return v;
    }

private:
    std::string base_url_;
    std::string path_;
};

}  // namespace conflictforge
