#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conflictforge/corpus.hpp"
#include "conflictforge/elicitation.hpp"
#include "conflictforge/gateway.hpp"
#include "conflictforge/text.hpp"

namespace conflictforge {

enum class CounterMethod { Substitution, Generation };

inline const char* to_string(CounterMethod m) {
    return m == CounterMethod::Substitution ? "Substitution" : "Generation";
}

struct CounterRecord {
    std::string question_id;
    std::string counter_answer_claim;
    std::optional<std::string> counter_object;  // Entity kind
    CounterMethod method = CounterMethod::Generation;
    std::string counter_memory;
    std::optional<std::string> memory_claim;        // Boolean kind: claim on the memory side
    std::optional<std::string> substituted_memory;  // Entity kind: word-level edited variant
};

struct ClaimPair {
    std::string true_claim;
    std::string false_claim;
};

struct BooleanDemonstration {
    std::string question;
    std::string true_claim;
    std::string false_claim;
};

/// Fixed in-context demonstrations so the claim-pair prompt is byte-stable
/// across runs. Also shipped as data/boolean_demonstrations.json.
inline const std::vector<BooleanDemonstration>& default_boolean_demonstrations() {
    static const std::vector<BooleanDemonstration> demos = {
        {"Is the Atlantic Ocean larger than the Pacific Ocean?",
         "The Atlantic Ocean is larger than the Pacific Ocean.",
         "The Atlantic Ocean is not larger than the Pacific Ocean."},
        {"Could a snail outpace a sprinting human?",
         "A snail could outpace a sprinting human.",
         "A snail could not outpace a sprinting human."},
        {"Do penguins live in the Northern Hemisphere?",
         "Penguins live in the Northern Hemisphere.",
         "Penguins do not live in the Northern Hemisphere."},
    };
    return demos;
}

/// Counter-answer for entity questions. Correct memory: a seeded-uniform
/// same-relation entity, excluding every ground-truth alias and any pool
/// entity already named in the memory answer. Wrong memory: the counter
/// side is the ground truth itself.
inline std::pair<std::string, std::string> make_counter_answer_entity(
    const SourceQuestion& q, const ElicitationRecord& rec, const EntityCatalog& catalog,
    uint64_t seed, const TemplateSet& templates = builtin_templates()) {
    if (q.kind != QuestionKind::Entity || !q.triple)
        throw ConfigError("entity counter-answer needs an Entity question with a triple");

    std::string counter_object;
    if (rec.verdict == Verdict::Wrong) {
        counter_object = q.triple->object;
    } else {
        const auto* pool = catalog.pool(q.triple->relation);
        if (!pool) throw ExhaustedPool(q.triple->relation);
        std::vector<std::string> eligible;
        for (auto& entity : *pool) {
            bool excluded = false;
            for (auto& alias : q.ground_truth)
                if (text::normalize(entity) == text::normalize(alias)) excluded = true;
            if (!excluded && text::contains_normalized(rec.memory_answer, entity)) excluded = true;
            if (!excluded) eligible.push_back(entity);
        }
        if (eligible.empty()) throw ExhaustedPool(q.triple->relation);
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
        counter_object = eligible[pick(rng)];
    }
    Triple counter_triple{q.triple->subject, q.triple->relation, counter_object};
    return {counter_object, render_claim(counter_triple, templates)};
}

inline CompletionRequest build_claim_pair_prompt(
    const SourceQuestion& q,
    const std::vector<BooleanDemonstration>& demos = default_boolean_demonstrations()) {
    std::string prompt =
        "Given a question, write two declarative claims: the first corresponding to the answer "
        "\"True\" and the second corresponding to the answer \"False\".\n";
    for (auto& d : demos) {
        prompt += "\nQuestion:\n" + d.question + "\nTrue claim: " + d.true_claim +
                  "\nFalse claim: " + d.false_claim + "\n";
    }
    prompt += "\nQuestion:\n" + q.question + "\nTrue claim:";
    return CompletionRequest::user(prompt);
}

inline ClaimPair parse_claim_pair(const std::string& response) {
    auto marker = response.find("False claim:");
    if (marker == std::string::npos) throw GenerationParseError("missing False claim");
    std::string head = response.substr(0, marker);
    auto true_marker = head.find("True claim:");
    if (true_marker != std::string::npos) head = head.substr(true_marker + 11);
    std::string true_claim = text::trim(head);
    std::string false_claim = text::trim(response.substr(marker + 12));
    // keep only the first line of the false side
    if (auto nl = false_claim.find('\n'); nl != std::string::npos)
        false_claim = text::trim(false_claim.substr(0, nl));
    if (true_claim.empty() || false_claim.empty())
        throw GenerationParseError("empty claim side");
    if (true_claim == false_claim) throw GenerationParseError("claims are identical");
    return ClaimPair{true_claim, false_claim};
}

inline ClaimPair make_claim_pair_boolean(
    const SourceQuestion& q, Gateway& gw,
    const std::vector<BooleanDemonstration>& demos = default_boolean_demonstrations()) {
    if (q.kind != QuestionKind::Boolean) throw ConfigError("claim pair needs a Boolean question");
    auto rec = gw.complete(build_claim_pair_prompt(q, demos));
    return parse_claim_pair(rec.response_text);
}

struct SidedClaims {
    std::string memory_claim;
    std::string counter_claim;
};

/// The counter side negates whatever the model answered.
inline SidedClaims assign_claims(const ClaimPair& pair, bool memory_answer_is_true) {
    if (memory_answer_is_true) return {pair.true_claim, pair.false_claim};
    return {pair.false_claim, pair.true_claim};
}

inline CompletionRequest build_counter_memory_prompt(const std::string& claim) {
    return CompletionRequest::user(
        "Given a claim, please write a short piece of evidence to support it. You can make up "
        "fake content and supporting evidence but it should be as realistic as possible.\n\n"
        "Claim:\n" + claim + "\nPassage:");
}

inline std::string generate_counter_memory(const std::string& claim, Gateway& gw) {
    if (text::trim(claim).empty()) throw ConfigError("claim must be non-empty");
    auto rec = gw.complete(build_counter_memory_prompt(claim));
    std::string passage = text::trim(rec.response_text);
    if (passage.empty()) throw EmptyResponse("counter-memory generation");
    return passage;
}

struct SubstitutionResult {
    std::string text;
    size_t replacements = 0;
};

/// Exact-match replacement of every alias occurrence inside the passage.
/// Zero matches is an error, never a silent no-op.
inline SubstitutionResult substitute_in_memory(const std::string& parametric_memory,
                                               const std::vector<std::string>& aliases,
                                               const std::string& replacement,
                                               bool case_sensitive = true) {
    if (replacement.empty()) throw ConfigError("replacement must be non-empty");
    SubstitutionResult res{parametric_memory, 0};
    for (auto& alias : aliases) {
        if (alias.empty()) continue;
        if (case_sensitive) {
            res.replacements += text::replace_all(res.text, alias, replacement);
        } else {
            // scan on a lowered shadow copy, edit the original
            std::string lowered = res.text, needle = alias;
            std::transform(lowered.begin(), lowered.end(), lowered.begin(), ::tolower);
            std::transform(needle.begin(), needle.end(), needle.begin(), ::tolower);
            size_t pos = 0;
            while ((pos = lowered.find(needle, pos)) != std::string::npos) {
                res.text.replace(pos, needle.size(), replacement);
                lowered.replace(pos, needle.size(), std::string(replacement.size(), '\0'));
                pos += replacement.size();
                ++res.replacements;
            }
        }
    }
    if (res.replacements == 0) throw NoMentionFound("no alias occurrence in passage");
    return res;
}

}  // namespace conflictforge
