#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "conflictforge/errors.hpp"
#include "conflictforge/text.hpp"

namespace conflictforge {

enum class QuestionKind { Entity, Boolean };

struct Triple {
    std::string subject;
    std::string relation;
    std::string object;
};

struct SourceQuestion {
    std::string id;
    QuestionKind kind = QuestionKind::Entity;
    std::string question;
    std::vector<std::string> ground_truth;
    std::optional<Triple> triple;
    std::optional<long long> popularity;  // monthly page views
    std::vector<std::string> facts;       // Boolean kind only
};

struct RelationTemplate {
    std::string relation;
    std::string pattern;  // contains exactly one [subj] and one [obj]
};

using TemplateSet = std::map<std::string, RelationTemplate>;

/// Built-in relation patterns for entity-centric claims.
inline const TemplateSet& builtin_templates() {
    static const TemplateSet t = [] {
        TemplateSet s;
        auto add = [&](std::string rel, std::string pat) {
            s[rel] = RelationTemplate{rel, std::move(pat)};
        };
        add("occupation", "[subj]'s occupation is [obj].");
        add("place_of_birth", "[subj] was born in [obj].");
        add("genre", "The genre of [subj] is [obj].");
        add("father", "[obj] is the father of [subj].");
        add("country", "[subj] is in [obj].");
        add("producer", "[obj] is the producer of [subj].");
        add("director", "[obj] is the director of [subj].");
        add("capital_of", "[subj] is the capital of [obj].");
        add("screenwriter", "[obj] was the screenwriter for [subj].");
        add("composer", "[obj] was the composer of [subj].");
        add("color", "The color of [subj] is [obj].");
        add("religion", "[obj] is the religion of [subj].");
        add("sport", "[subj] plays [obj].");
        add("author", "[obj] is the author of [subj].");
        add("mother", "[obj] is the mother of [subj].");
        add("capital", "[obj] is the capital of [subj].");
        return s;
    }();
    return t;
}

inline nlohmann::json templates_to_json(const TemplateSet& set) {
    nlohmann::json out = nlohmann::json::object();
    for (auto& [rel, t] : set) out[rel] = t.pattern;
    return out;
}

inline TemplateSet templates_from_json(const nlohmann::json& j) {
    TemplateSet set;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string pat = it.value().get<std::string>();
        auto once = [&](std::string_view ph) {
            auto first = pat.find(ph);
            return first != std::string::npos && pat.find(ph, first + 1) == std::string::npos;
        };
        if (!once("[subj]") || !once("[obj]"))
            throw ConfigError("template for '" + it.key() + "' must contain [subj] and [obj] exactly once");
        set[it.key()] = RelationTemplate{it.key(), pat};
    }
    return set;
}

inline std::string render_claim(const Triple& triple, const TemplateSet& templates) {
    auto it = templates.find(triple.relation);
    if (it == templates.end()) throw UnknownRelation(triple.relation);
    std::string out = it->second.pattern;
    text::replace_all(out, "[subj]", triple.subject);
    text::replace_all(out, "[obj]", triple.object);
    return out;
}

struct Diagnostic {
    size_t line = 0;       // 1-based line in the input file
    std::string code;      // MissingField, DuplicateId, MalformedRecord, NonBooleanAnswer
    std::string detail;
};

struct LoadResult {
    std::vector<SourceQuestion> questions;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

inline std::vector<std::string> dedup_aliases(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& a : raw) {
        if (text::trim(a).empty()) continue;
        if (seen.insert(text::normalize(a)).second) out.push_back(a);
    }
    return out;
}

}  // namespace detail

/// Entity dataset: JSONL records {id, question, ground_truth, triple:{subject,relation,object}, popularity?}.
inline LoadResult load_entity_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    LoadResult res;
    std::set<std::string> ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            res.diagnostics.push_back({lineno, "MalformedRecord", "not a JSON object"});
            continue;
        }
        bool bad = false;
        for (const char* f : {"id", "question", "ground_truth", "triple"}) {
            if (!j.contains(f)) {
                res.diagnostics.push_back({lineno, "MissingField", f});
                bad = true;
            }
        }
        if (bad) continue;
        SourceQuestion q;
        q.id = j["id"].get<std::string>();
        if (!ids.insert(q.id).second) {
            res.diagnostics.push_back({lineno, "DuplicateId", q.id});
            continue;
        }
        q.kind = QuestionKind::Entity;
        q.question = j["question"].get<std::string>();
        q.ground_truth = detail::dedup_aliases(j["ground_truth"].get<std::vector<std::string>>());
        if (q.ground_truth.empty()) {
            res.diagnostics.push_back({lineno, "MissingField", "ground_truth (empty)"});
            continue;
        }
        const auto& t = j["triple"];
        if (!t.contains("subject") || !t.contains("relation") || !t.contains("object")) {
            res.diagnostics.push_back({lineno, "MalformedRecord", "triple needs subject/relation/object"});
            continue;
        }
        q.triple = Triple{t["subject"].get<std::string>(), t["relation"].get<std::string>(),
                          t["object"].get<std::string>()};
        if (j.contains("popularity") && !j["popularity"].is_null()) {
            long long pop = j["popularity"].get<long long>();
            if (pop < 0) {
                res.diagnostics.push_back({lineno, "MalformedRecord", "negative popularity"});
                continue;
            }
            q.popularity = pop;
        }
        res.questions.push_back(std::move(q));
    }
    return res;
}

/// Boolean dataset: JSONL records {id?, question, answer:"True"|"False", facts:[...]}.
inline LoadResult load_boolean_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    LoadResult res;
    std::set<std::string> ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            res.diagnostics.push_back({lineno, "MalformedRecord", "not a JSON object"});
            continue;
        }
        bool bad = false;
        for (const char* f : {"question", "answer", "facts"}) {
            if (!j.contains(f)) {
                res.diagnostics.push_back({lineno, "MissingField", f});
                bad = true;
            }
        }
        if (bad) continue;
        SourceQuestion q;
        q.id = j.contains("id") ? j["id"].get<std::string>() : "b" + std::to_string(lineno);
        if (!ids.insert(q.id).second) {
            res.diagnostics.push_back({lineno, "DuplicateId", q.id});
            continue;
        }
        q.kind = QuestionKind::Boolean;
        q.question = j["question"].get<std::string>();
        std::string answer = j["answer"].get<std::string>();
        if (answer != "True" && answer != "False") {
            res.diagnostics.push_back({lineno, "NonBooleanAnswer", answer});
            continue;
        }
        q.ground_truth = {answer};
        q.facts = j["facts"].get<std::vector<std::string>>();
        if (q.facts.empty()) {
            res.diagnostics.push_back({lineno, "MissingField", "facts (empty)"});
            continue;
        }
        res.questions.push_back(std::move(q));
    }
    return res;
}

struct EntityCatalog {
    // relation -> object entities, first-occurrence order, normalized-deduplicated
    std::map<std::string, std::vector<std::string>> pools;

    const std::vector<std::string>* pool(const std::string& relation) const {
        auto it = pools.find(relation);
        return it == pools.end() ? nullptr : &it->second;
    }
};

inline EntityCatalog build_entity_catalog(const std::vector<SourceQuestion>& questions) {
    EntityCatalog cat;
    std::map<std::string, std::set<std::string>> seen;
    for (auto& q : questions) {
        if (q.kind != QuestionKind::Entity || !q.triple) continue;
        auto norm = text::normalize(q.triple->object);
        if (seen[q.triple->relation].insert(norm).second)
            cat.pools[q.triple->relation].push_back(q.triple->object);
    }
    return cat;
}

}  // namespace conflictforge
