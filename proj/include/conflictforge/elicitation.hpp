#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conflictforge/corpus.hpp"
#include "conflictforge/gateway.hpp"
#include "conflictforge/text.hpp"

namespace conflictforge {

enum class Verdict { Correct, Wrong, Unknown, Illegal };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Correct: return "Correct";
        case Verdict::Wrong: return "Wrong";
        case Verdict::Unknown: return "Unknown";
        case Verdict::Illegal: return "Illegal";
    }
    return "?";
}

inline Verdict verdict_from_string(const std::string& s) {
    if (s == "Correct") return Verdict::Correct;
    if (s == "Wrong") return Verdict::Wrong;
    if (s == "Unknown") return Verdict::Unknown;
    if (s == "Illegal") return Verdict::Illegal;
    throw ConfigError("unknown verdict: " + s);
}

struct ElicitationRecord {
    std::string question_id;
    std::string raw_response;
    std::string memory_answer;      // empty when verdict == Illegal
    std::string parametric_memory;  // empty when verdict == Illegal
    Verdict verdict = Verdict::Illegal;
};

enum class PromptStyle { AnswerFirst, EvidenceSplit };

/// Closed-book elicitation prompt: answer in paragraph one, supporting
/// background in paragraph two.
inline CompletionRequest build_closed_book_prompt(const SourceQuestion& q, PromptStyle style) {
    std::string instruction;
    if (q.kind == QuestionKind::Entity) {
        instruction = style == PromptStyle::AnswerFirst
                          ? "The first paragraph answers the question and the second paragraph "
                            "gives the reason."
                          : "In the first paragraph, you are expected to answer the question. And "
                            "in the second paragraph, you should give the evidence.";
    } else {
        instruction = style == PromptStyle::AnswerFirst
                          ? "The first paragraph answers the question \"True\" or \"False\" and "
                            "the second paragraph gives the reason."
                          : "In the first paragraph, you are expected to answer the question "
                            "\"True\" or \"False\". And in the second paragraph, you should give "
                            "the evidence.";
    }
    return CompletionRequest::user(instruction + "\n\nQuestion:\n" + q.question + "\nAnswer:");
}

struct ParsedResponse {
    std::string answer;  // first paragraph
    std::string memory;  // remaining paragraphs re-joined
};

namespace detail {

inline std::vector<std::string> split_paragraphs(const std::string& raw) {
    std::vector<std::string> paragraphs;
    std::string cur;
    size_t start = 0;
    auto flush = [&] {
        auto t = text::trim(cur);
        if (!t.empty()) paragraphs.push_back(t);
        cur.clear();
    };
    while (start <= raw.size()) {
        size_t nl = raw.find('\n', start);
        std::string line = raw.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
        if (text::trim(line).empty()) {
            flush();
        } else {
            if (!cur.empty()) cur.push_back('\n');
            cur += line;
        }
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    flush();
    return paragraphs;
}

}  // namespace detail

/// First blank-line boundary splits answer from supporting memory; three or
/// more paragraphs keep the remainder joined.
inline std::optional<ParsedResponse> parse_two_paragraph(const std::string& raw) {
    auto paragraphs = detail::split_paragraphs(raw);
    if (paragraphs.size() < 2) return std::nullopt;
    std::string memory = paragraphs[1];
    for (size_t i = 2; i < paragraphs.size(); ++i) memory += "\n\n" + paragraphs[i];
    return ParsedResponse{paragraphs[0], memory};
}

inline const std::vector<std::string>& default_abstention_lexicon() {
    static const std::vector<std::string> lex = {
        "unknown",      "i don't know",     "i do not know",
        "not sure",     "cannot determine", "no information"};
    return lex;
}

inline bool is_abstention(const std::string& answer,
                          const std::vector<std::string>& lexicon = default_abstention_lexicon()) {
    std::string norm = text::normalize(answer);
    for (auto& phrase : lexicon)
        if (norm.find(phrase) != std::string::npos) return true;
    return false;
}

/// Correct iff any ground-truth alias occurs (normalized substring) in the
/// answer; Boolean kind matches the true/false token instead.
inline Verdict classify_answer(const std::string& answer, const SourceQuestion& q,
                               const std::vector<std::string>& lexicon = default_abstention_lexicon()) {
    if (is_abstention(answer, lexicon)) return Verdict::Unknown;
    if (q.kind == QuestionKind::Boolean) {
        bool says_true = text::has_word(answer, "true");
        bool says_false = text::has_word(answer, "false");
        if (says_true == says_false) return Verdict::Unknown;  // neither or both
        bool truth = q.ground_truth.at(0) == "True";
        return (says_true == truth) ? Verdict::Correct : Verdict::Wrong;
    }
    for (auto& alias : q.ground_truth)
        if (text::contains_normalized(answer, alias)) return Verdict::Correct;
    return Verdict::Wrong;
}

inline ElicitationRecord elicit(const SourceQuestion& q, Gateway& gw,
                                PromptStyle style = PromptStyle::AnswerFirst,
                                const std::vector<std::string>& lexicon = default_abstention_lexicon()) {
    auto rec = gw.complete(build_closed_book_prompt(q, style));
    ElicitationRecord out;
    out.question_id = q.id;
    out.raw_response = rec.response_text;
    auto parsed = parse_two_paragraph(rec.response_text);
    if (!parsed) {
        out.verdict = Verdict::Illegal;
        return out;
    }
    out.memory_answer = parsed->answer;
    out.parametric_memory = parsed->memory;
    out.verdict = classify_answer(parsed->answer, q, lexicon);
    return out;
}

}  // namespace conflictforge
