#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflictforge/counterforge.hpp"
#include "conflictforge/elicitation.hpp"
#include "conflictforge/errors.hpp"
#include "conflictforge/gateway.hpp"

namespace conflictforge {

enum class NliLabel { Entail, Neutral, Contradict };

inline const char* to_string(NliLabel l) {
    switch (l) {
        case NliLabel::Entail: return "Entail";
        case NliLabel::Neutral: return "Neutral";
        case NliLabel::Contradict: return "Contradict";
    }
    return "?";
}

struct EntailmentVerdict {
    std::string premise;
    std::string hypothesis;
    NliLabel label = NliLabel::Neutral;
    double score = 0.0;  // probability of the argmax label
};

class EntailmentJudge {
public:
    virtual ~EntailmentJudge() = default;
    virtual EntailmentVerdict entails(const std::string& premise, const std::string& hypothesis) = 0;
};

/// Deterministic stub judge for tests. Identical premise/hypothesis pairs
/// entail reflexively; everything else must be scripted.
class ScriptedJudge : public EntailmentJudge {
public:
    void script(const std::string& premise, const std::string& hypothesis, NliLabel label,
                double score = 1.0) {
        verdicts_[key(premise, hypothesis)] = {label, score};
    }

    EntailmentVerdict entails(const std::string& premise, const std::string& hypothesis) override {
        auto it = verdicts_.find(key(premise, hypothesis));
        if (it != verdicts_.end())
            return {premise, hypothesis, it->second.first, it->second.second};
        if (premise == hypothesis) return {premise, hypothesis, NliLabel::Entail, 1.0};
        if (default_label_) return {premise, hypothesis, *default_label_, 1.0};
        throw UnscriptedPrompt("judge pair: " + hypothesis.substr(0, 80));
    }

    /// Fallback label for every unscripted pair (used by mock runs where
    /// only failures are scripted explicitly).
    void set_default(NliLabel label) { default_label_ = label; }

    void save(const std::string& path) const {
        auto arr = nlohmann::json::array();
        for (auto& [k, v] : verdicts_) {
            auto sep = k.find('\x1f');
            arr.push_back({{"premise", k.substr(0, sep)},
                           {"hypothesis", k.substr(sep + 1)},
                           {"label", to_string(v.first)},
                           {"score", v.second}});
        }
        nlohmann::json j;
        j["default"] = default_label_ ? to_string(*default_label_) : "";
        j["verdicts"] = arr;
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }

    static std::shared_ptr<ScriptedJudge> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open judge script: " + path);
        nlohmann::json j;
        in >> j;
        auto judge = std::make_shared<ScriptedJudge>();
        if (auto d = j.value("default", std::string{}); !d.empty())
            judge->set_default(label_from_string(d));
        for (auto& v : j["verdicts"])
            judge->script(v["premise"], v["hypothesis"], label_from_string(v["label"]),
                          v.value("score", 1.0));
        return judge;
    }

    static NliLabel label_from_string(const std::string& s) {
        if (s == "Entail") return NliLabel::Entail;
        if (s == "Neutral") return NliLabel::Neutral;
        if (s == "Contradict") return NliLabel::Contradict;
        throw MalformedJudgeOutput("unknown label: " + s);
    }

private:
    static std::string key(const std::string& p, const std::string& h) { return p + '\x1f' + h; }
    std::map<std::string, std::pair<NliLabel, double>> verdicts_;
    std::optional<NliLabel> default_label_;
};

/// LLM-as-judge: three-way label elicited through the gateway at
/// temperature zero.
class LlmJudge : public EntailmentJudge {
public:
    explicit LlmJudge(Gateway& gw) : gw_(gw) {}

    static CompletionRequest build_prompt(const std::string& premise, const std::string& hypothesis) {
        return CompletionRequest::user(
            "Does the premise entail the hypothesis? Answer with exactly one word: "
            "\"Entailment\", \"Neutral\", or \"Contradiction\".\n\nPremise:\n" + premise +
            "\n\nHypothesis:\n" + hypothesis + "\n\nAnswer:");
    }

    EntailmentVerdict entails(const std::string& premise, const std::string& hypothesis) override {
        std::string reply;
        try {
            reply = gw_.complete(build_prompt(premise, hypothesis)).response_text;
        } catch (const TransportError& e) {
            throw JudgeUnavailable(e.what());
        }
        std::string norm = text::normalize(reply);
        NliLabel label;
        if (norm.find("entail") != std::string::npos) label = NliLabel::Entail;
        else if (norm.find("neutral") != std::string::npos) label = NliLabel::Neutral;
        else if (norm.find("contradict") != std::string::npos) label = NliLabel::Contradict;
        else throw MalformedJudgeOutput(reply.substr(0, 120));
        return {premise, hypothesis, label, 1.0};
    }

private:
    Gateway& gw_;
};

enum class FunnelStatus {
    Kept,
    DroppedAbstention,
    DroppedIllegal,
    DroppedMemEntail,
    DroppedConsistency,
    DroppedCtrEntail,
};

inline const char* to_string(FunnelStatus s) {
    switch (s) {
        case FunnelStatus::Kept: return "Kept";
        case FunnelStatus::DroppedAbstention: return "DroppedAbstention";
        case FunnelStatus::DroppedIllegal: return "DroppedIllegal";
        case FunnelStatus::DroppedMemEntail: return "DroppedMemEntail";
        case FunnelStatus::DroppedConsistency: return "DroppedConsistency";
        case FunnelStatus::DroppedCtrEntail: return "DroppedCtrEntail";
    }
    return "?";
}

struct ConflictExample {
    std::string question_id;
    std::string question;
    std::string memory_answer;
    std::string parametric_memory;
    std::string counter_answer_claim;
    std::string counter_memory;
    std::optional<long long> popularity;
    FunnelStatus funnel_status = FunnelStatus::Kept;
};

struct FunnelStats {
    size_t initial = 0;
    size_t after_abstention_illegal = 0;
    size_t after_mem_entail = 0;
    size_t after_consistency = 0;
    size_t after_ctr_entail = 0;
    size_t final_count = 0;

    nlohmann::json to_json() const {
        return {{"Initial", initial},
                {"AfterAbstentionIllegal", after_abstention_illegal},
                {"AfterMemEntail", after_mem_entail},
                {"AfterConsistency", after_consistency},
                {"AfterCtrEntail", after_ctr_entail},
                {"Final", final_count}};
    }
};

struct SupportCheck {
    bool keep = false;
    EntailmentVerdict memory_side;
    EntailmentVerdict counter_side;
};

/// Both sides must entail: parametric memory -> memory answer and
/// counter-memory -> counter claim.
inline SupportCheck check_support(const ConflictExample& example, EntailmentJudge& judge) {
    SupportCheck res;
    res.memory_side = judge.entails(example.parametric_memory, example.memory_answer);
    res.counter_side = judge.entails(example.counter_memory, example.counter_answer_claim);
    res.keep = res.memory_side.label == NliLabel::Entail &&
               res.counter_side.label == NliLabel::Entail;
    return res;
}

inline CompletionRequest build_consistency_prompt(const SourceQuestion& q,
                                                  const std::string& information) {
    std::string instruction =
        q.kind == QuestionKind::Boolean
            ? "According to the given information and your knowledge, answer the question "
              "\"True\" or \"False\"."
            : "According to the given information and your knowledge, answer the question.";
    return CompletionRequest::user(instruction + "\n\nInformation:\n" + information +
                                   "\n\nQuestion:\n" + q.question + "\nAnswer:");
}

/// Re-ask with parametric memory as the sole evidence; the answer must land
/// on the same side as the closed-book memory answer.
inline bool check_consistency(const SourceQuestion& q, const ElicitationRecord& rec, Gateway& gw) {
    auto reply = gw.complete(build_consistency_prompt(q, rec.parametric_memory));
    Verdict again = classify_answer(reply.response_text, q);
    return again == rec.verdict;
}

struct PipelineItem {
    SourceQuestion question;
    ElicitationRecord elicitation;
    std::optional<CounterRecord> counter;
};

struct FunnelOutcome {
    std::vector<ConflictExample> all;   // every example, with its drop reason
    std::vector<ConflictExample> kept;
    FunnelStats stats;
};

/// Filter order follows the funnel: abstention/illegal, memory-side
/// entailment, answer consistency, counter-side entailment.
inline FunnelOutcome run_funnel(const std::vector<PipelineItem>& items, EntailmentJudge& judge,
                                const std::function<bool(const PipelineItem&)>& consistent,
                                std::vector<EntailmentVerdict>* verdict_log = nullptr) {
    FunnelOutcome out;
    out.stats.initial = items.size();

    struct Staged {
        const PipelineItem* item;
        ConflictExample example;
    };
    std::vector<Staged> alive;

    for (auto& item : items) {
        ConflictExample ex;
        ex.question_id = item.question.id;
        ex.question = item.question.question;
        ex.memory_answer = item.elicitation.memory_answer;
        ex.parametric_memory = item.elicitation.parametric_memory;
        ex.popularity = item.question.popularity;
        if (item.counter) {
            ex.counter_answer_claim = item.counter->counter_answer_claim;
            ex.counter_memory = item.counter->counter_memory;
        }
        switch (item.elicitation.verdict) {
            case Verdict::Unknown:
                ex.funnel_status = FunnelStatus::DroppedAbstention;
                out.all.push_back(ex);
                continue;
            case Verdict::Illegal:
                ex.funnel_status = FunnelStatus::DroppedIllegal;
                out.all.push_back(ex);
                continue;
            default:
                break;
        }
        alive.push_back({&item, std::move(ex)});
    }
    out.stats.after_abstention_illegal = alive.size();

    std::vector<Staged> next;
    for (auto& s : alive) {
        // Boolean items entail against the declarative memory claim
        const std::string& hypothesis =
            (s.item->counter && s.item->counter->memory_claim)
                ? *s.item->counter->memory_claim
                : s.example.memory_answer;
        auto v = judge.entails(s.example.parametric_memory, hypothesis);
        if (verdict_log) verdict_log->push_back(v);
        if (v.label == NliLabel::Entail) {
            next.push_back(std::move(s));
        } else {
            s.example.funnel_status = FunnelStatus::DroppedMemEntail;
            out.all.push_back(std::move(s.example));
        }
    }
    alive = std::move(next);
    out.stats.after_mem_entail = alive.size();

    next.clear();
    for (auto& s : alive) {
        if (consistent(*s.item)) {
            next.push_back(std::move(s));
        } else {
            s.example.funnel_status = FunnelStatus::DroppedConsistency;
            out.all.push_back(std::move(s.example));
        }
    }
    alive = std::move(next);
    out.stats.after_consistency = alive.size();

    next.clear();
    for (auto& s : alive) {
        auto v = judge.entails(s.example.counter_memory, s.example.counter_answer_claim);
        if (verdict_log) verdict_log->push_back(v);
        if (v.label == NliLabel::Entail) {
            next.push_back(std::move(s));
        } else {
            s.example.funnel_status = FunnelStatus::DroppedCtrEntail;
            out.all.push_back(std::move(s.example));
        }
    }
    alive = std::move(next);
    out.stats.after_ctr_entail = alive.size();
    out.stats.final_count = alive.size();

    for (auto& s : alive) {
        s.example.funnel_status = FunnelStatus::Kept;
        out.kept.push_back(s.example);
        out.all.push_back(std::move(s.example));
    }
    return out;
}

/// Seeded sample of judge verdicts for manual review.
inline void export_audit_sample(const std::vector<EntailmentVerdict>& verdicts, size_t n,
                                uint64_t seed, const std::string& path) {
    if (verdicts.size() < n) throw InsufficientVerdicts(std::to_string(verdicts.size()) + " < " +
                                                        std::to_string(n));
    std::vector<size_t> idx(verdicts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);

    std::ofstream out(path);
    for (size_t i : idx) {
        const auto& v = verdicts[i];
        nlohmann::json j = {{"premise", v.premise},
                            {"hypothesis", v.hypothesis},
                            {"label", to_string(v.label)},
                            {"score", v.score}};
        out << j.dump() << "\n";
    }
}

}  // namespace conflictforge
