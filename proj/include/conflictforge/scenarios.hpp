#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflictforge/corpus.hpp"
#include "conflictforge/embed.hpp"
#include "conflictforge/errors.hpp"
#include "conflictforge/filters.hpp"
#include "conflictforge/gateway.hpp"
#include "conflictforge/text.hpp"

namespace conflictforge {

enum class Stance { SupportsMemory, SupportsCounter, Irrelevant };
enum class Origin { Elicited, Generated, Substituted, Human, AnswerOnly };
enum class Granularity { Whole, Fragment };

inline const char* to_string(Stance s) {
    switch (s) {
        case Stance::SupportsMemory: return "SupportsMemory";
        case Stance::SupportsCounter: return "SupportsCounter";
        case Stance::Irrelevant: return "Irrelevant";
    }
    return "?";
}

inline const char* to_string(Origin o) {
    switch (o) {
        case Origin::Elicited: return "Elicited";
        case Origin::Generated: return "Generated";
        case Origin::Substituted: return "Substituted";
        case Origin::Human: return "Human";
        case Origin::AnswerOnly: return "AnswerOnly";
    }
    return "?";
}

struct EvidenceItem {
    std::string text;
    Stance stance = Stance::SupportsMemory;
    Origin origin = Origin::Elicited;
    Granularity granularity = Granularity::Whole;
    size_t length_units = 0;  // whitespace-delimited tokens
};

inline EvidenceItem make_evidence(std::string text, Stance stance, Origin origin,
                                  Granularity granularity = Granularity::Whole) {
    EvidenceItem e;
    e.length_units = text::token_count(text);
    e.text = std::move(text);
    e.stance = stance;
    e.origin = origin;
    e.granularity = granularity;
    return e;
}

enum class OptionKind { MemoryAnswer, CounterAnswer, Uncertain, IrrelevantOption };
enum class Choice { MemoryAnswer, CounterAnswer, Uncertain, IrrelevantOption, Unparseable };

inline const char* to_string(OptionKind k) {
    switch (k) {
        case OptionKind::MemoryAnswer: return "MemoryAnswer";
        case OptionKind::CounterAnswer: return "CounterAnswer";
        case OptionKind::Uncertain: return "Uncertain";
        case OptionKind::IrrelevantOption: return "IrrelevantOption";
    }
    return "?";
}

inline const char* to_string(Choice c) {
    switch (c) {
        case Choice::MemoryAnswer: return "MemoryAnswer";
        case Choice::CounterAnswer: return "CounterAnswer";
        case Choice::Uncertain: return "Uncertain";
        case Choice::IrrelevantOption: return "IrrelevantOption";
        case Choice::Unparseable: return "Unparseable";
    }
    return "?";
}

struct ScenarioOption {
    char label = 'A';
    OptionKind kind = OptionKind::Uncertain;
    std::string option_text;
};

enum class ScenarioKind {
    SingleSource,
    MultiSource,
    OrderProbe,
    AnswerAsEvidence,
    Quantity,
    IrrelevantMix,
    Fragmented,
};

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::SingleSource: return "SingleSource";
        case ScenarioKind::MultiSource: return "MultiSource";
        case ScenarioKind::OrderProbe: return "OrderProbe";
        case ScenarioKind::AnswerAsEvidence: return "AnswerAsEvidence";
        case ScenarioKind::Quantity: return "Quantity";
        case ScenarioKind::IrrelevantMix: return "IrrelevantMix";
        case ScenarioKind::Fragmented: return "Fragmented";
    }
    return "?";
}

struct Scenario {
    std::string scenario_id;
    std::string question_id;
    std::string question;
    ScenarioKind kind = ScenarioKind::MultiSource;
    nlohmann::json params = nlohmann::json::object();
    std::vector<EvidenceItem> evidence;
    std::vector<ScenarioOption> options;
    uint64_t seed = 0;
};

struct TrialResult {
    std::string scenario_id;
    std::string raw_response;
    Choice choice = Choice::Unparseable;
};

/// Memory answer and counter-answer shuffle by seed; "Uncertain" is pinned
/// last; irrelevant options slot in between.
inline std::vector<ScenarioOption> build_options(
    const ConflictExample& example, uint64_t seed,
    const std::vector<std::string>& irrelevant_claims = {}) {
    std::mt19937_64 rng(seed);
    bool memory_first = std::uniform_int_distribution<int>(0, 1)(rng) == 0;

    std::vector<ScenarioOption> options;
    ScenarioOption mem{'A', OptionKind::MemoryAnswer, example.memory_answer};
    ScenarioOption ctr{'A', OptionKind::CounterAnswer, example.counter_answer_claim};
    if (memory_first) {
        options.push_back(mem);
        options.push_back(ctr);
    } else {
        options.push_back(ctr);
        options.push_back(mem);
    }
    for (auto& claim : irrelevant_claims)
        options.push_back({'A', OptionKind::IrrelevantOption, claim});
    options.push_back({'A', OptionKind::Uncertain, "Uncertain"});
    for (size_t i = 0; i < options.size(); ++i)
        options[i].label = static_cast<char>('A' + i);
    return options;
}

enum class SingleSourceVariant { Generation, Substitution };
enum class OrderPolicy { MemoryFirst, CounterFirst, Random };
enum class EvidenceSide { MemorySide, CounterSide };

namespace detail {

inline void shuffle_evidence(std::vector<EvidenceItem>& ev, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::shuffle(ev.begin(), ev.end(), rng);
}

inline std::string scenario_id(const ConflictExample& ex, ScenarioKind kind,
                               const std::string& tag) {
    std::string id = ex.question_id + "/" + to_string(kind);
    if (!tag.empty()) id += "/" + tag;
    return id;
}

}  // namespace detail

inline Scenario scenario_single_source(const ConflictExample& example, SingleSourceVariant variant,
                                       const std::optional<std::string>& substituted_memory,
                                       uint64_t seed) {
    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = ScenarioKind::SingleSource;
    s.seed = seed;
    if (variant == SingleSourceVariant::Generation) {
        s.params["variant"] = "Generation";
        s.evidence.push_back(
            make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated));
    } else {
        if (!substituted_memory) throw MissingVariant("no substitution counter-memory");
        s.params["variant"] = "Substitution";
        s.evidence.push_back(
            make_evidence(*substituted_memory, Stance::SupportsCounter, Origin::Substituted));
    }
    s.options = build_options(example, seed);
    s.scenario_id = detail::scenario_id(example, s.kind, s.params["variant"]);
    return s;
}

inline Scenario scenario_multi_source(const ConflictExample& example, OrderPolicy policy,
                                      uint64_t seed) {
    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = policy == OrderPolicy::Random ? ScenarioKind::MultiSource : ScenarioKind::OrderProbe;
    s.seed = seed;

    auto mem = make_evidence(example.parametric_memory, Stance::SupportsMemory, Origin::Elicited);
    auto ctr = make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated);
    bool memory_first;
    switch (policy) {
        case OrderPolicy::MemoryFirst: memory_first = true; s.params["order"] = "MemoryFirst"; break;
        case OrderPolicy::CounterFirst: memory_first = false; s.params["order"] = "CounterFirst"; break;
        default: {
            std::mt19937_64 rng(seed);
            memory_first = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
            s.params["order"] = "Random";
        }
    }
    if (memory_first) {
        s.evidence = {mem, ctr};
    } else {
        s.evidence = {ctr, mem};
    }
    s.options = build_options(example, seed);
    s.scenario_id = detail::scenario_id(example, s.kind, s.params["order"]);
    return s;
}

enum class LengthBucket { Below, Mid, Above };

inline const char* to_string(LengthBucket b) {
    switch (b) {
        case LengthBucket::Below: return "Below";
        case LengthBucket::Mid: return "Mid";
        case LengthBucket::Above: return "Above";
    }
    return "?";
}

/// Ratio of parametric-memory tokens to counter-memory tokens; boundaries
/// 0.8 and 1.2 belong to the middle bucket.
inline LengthBucket bucket_by_length_ratio(const ConflictExample& example) {
    size_t mem = text::token_count(example.parametric_memory);
    size_t ctr = text::token_count(example.counter_memory);
    if (ctr == 0 || mem == 0) throw ZeroLength(example.question_id);
    double ratio = static_cast<double>(mem) / static_cast<double>(ctr);
    if (ratio < 0.8) return LengthBucket::Below;
    if (ratio > 1.2) return LengthBucket::Above;
    return LengthBucket::Mid;
}

inline Scenario scenario_answer_as_evidence(const ConflictExample& example, EvidenceSide shorten,
                                            uint64_t seed) {
    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = ScenarioKind::AnswerAsEvidence;
    s.seed = seed;
    s.params["shorten"] = shorten == EvidenceSide::MemorySide ? "MemorySide" : "CounterSide";

    EvidenceItem mem =
        shorten == EvidenceSide::MemorySide
            ? make_evidence(example.memory_answer, Stance::SupportsMemory, Origin::AnswerOnly)
            : make_evidence(example.parametric_memory, Stance::SupportsMemory, Origin::Elicited);
    EvidenceItem ctr =
        shorten == EvidenceSide::CounterSide
            ? make_evidence(example.counter_answer_claim, Stance::SupportsCounter, Origin::AnswerOnly)
            : make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated);
    s.evidence = {mem, ctr};
    detail::shuffle_evidence(s.evidence, seed);
    s.options = build_options(example, seed);
    s.scenario_id = detail::scenario_id(example, s.kind, s.params["shorten"]);
    return s;
}

struct ExtraEvidencePool {
    std::vector<EvidenceItem> memory_side;
    std::vector<EvidenceItem> counter_side;
};

/// Vote-split scenario: n_mem supporting vs n_ctr conflicting items, at most
/// two per side. The first item per side is the elicited/generated passage;
/// the second comes from the extra pool (generated or human-written).
inline Scenario scenario_quantity(const ConflictExample& example, int n_mem, int n_ctr,
                                  const ExtraEvidencePool& extra_pool, uint64_t seed) {
    if (n_mem < 0 || n_mem > 2 || n_ctr < 0 || n_ctr > 2)
        throw ConfigError("quantity sides must be in 0..2");
    if (n_mem + n_ctr < 1) throw ConfigError("at least one evidence item required");

    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = ScenarioKind::Quantity;
    s.seed = seed;
    s.params["n_mem"] = n_mem;
    s.params["n_ctr"] = n_ctr;

    if (n_mem >= 1)
        s.evidence.push_back(
            make_evidence(example.parametric_memory, Stance::SupportsMemory, Origin::Elicited));
    if (n_mem == 2) {
        if (extra_pool.memory_side.empty()) throw PoolUnderflow("memory side");
        s.evidence.push_back(extra_pool.memory_side.front());
    }
    if (n_ctr >= 1)
        s.evidence.push_back(
            make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated));
    if (n_ctr == 2) {
        if (extra_pool.counter_side.empty()) throw PoolUnderflow("counter side");
        s.evidence.push_back(extra_pool.counter_side.front());
    }
    detail::shuffle_evidence(s.evidence, seed);
    s.options = build_options(example, seed);
    s.scenario_id = detail::scenario_id(example, s.kind,
                                        std::to_string(n_mem) + ":" + std::to_string(n_ctr));
    return s;
}

/// One sentence of the retrieval corpus plus the triple used to render its
/// answer option when it is served as irrelevant evidence.
struct IrrelevantCandidate {
    std::string sentence;
    Triple triple;
};

/// Top-k by cosine similarity to the question, after excluding sentences
/// that mention either conflicting entity.
inline std::vector<IrrelevantCandidate> retrieve_irrelevant(
    const std::string& question, const std::vector<IrrelevantCandidate>& corpus, size_t k,
    Embedder& embedder, const std::vector<std::string>& excluded_entities) {
    auto qv = embedder.embed(question);

    std::vector<std::pair<double, size_t>> scored;
    for (size_t i = 0; i < corpus.size(); ++i) {
        bool excluded = false;
        for (auto& entity : excluded_entities)
            if (!entity.empty() && text::contains_normalized(corpus[i].sentence, entity))
                excluded = true;
        if (excluded) continue;
        scored.emplace_back(cosine(qv, embedder.embed(corpus[i].sentence)), i);
    }
    if (scored.size() < k) throw CorpusTooSmall(std::to_string(scored.size()) + " after exclusion");

    // ties break toward earlier corpus order
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<IrrelevantCandidate> out;
    for (size_t i = 0; i < k; ++i) out.push_back(corpus[scored[i].second]);
    return out;
}

inline Scenario scenario_irrelevant(const ConflictExample& example, int n_relevant,
                                    int n_irrelevant,
                                    const std::vector<IrrelevantCandidate>& corpus,
                                    Embedder& embedder, uint64_t seed,
                                    const std::vector<std::string>& excluded_entities,
                                    const TemplateSet& templates = builtin_templates()) {
    if (n_relevant < 0 || n_relevant > 2 || n_irrelevant < 0 || n_irrelevant > 3)
        throw ConfigError("irrelevant mix bounds are 0..2 relevant, 0..3 irrelevant");

    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = ScenarioKind::IrrelevantMix;
    s.seed = seed;
    s.params["n_relevant"] = n_relevant;
    s.params["n_irrelevant"] = n_irrelevant;

    if (n_relevant >= 1)
        s.evidence.push_back(
            make_evidence(example.parametric_memory, Stance::SupportsMemory, Origin::Elicited));
    if (n_relevant == 2)
        s.evidence.push_back(
            make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated));

    std::vector<std::string> irrelevant_claims;
    if (n_irrelevant > 0) {
        auto picked = retrieve_irrelevant(example.question, corpus,
                                          static_cast<size_t>(n_irrelevant), embedder,
                                          excluded_entities);
        for (auto& cand : picked) {
            s.evidence.push_back(
                make_evidence(cand.sentence, Stance::Irrelevant, Origin::Human));
            irrelevant_claims.push_back(render_claim(cand.triple, templates));
        }
    }
    detail::shuffle_evidence(s.evidence, seed);
    s.options = build_options(example, seed, irrelevant_claims);
    s.scenario_id = detail::scenario_id(example, s.kind,
                                        std::to_string(n_relevant) + ":" +
                                            std::to_string(n_irrelevant));
    return s;
}

/// Boolean-kind probe: one side broken into per-fact fragments, the other
/// kept whole. Joining the fragments with blank lines reproduces the
/// whole-mode passage.
inline Scenario scenario_fragmented(const ConflictExample& example,
                                    const std::vector<std::string>& fragments,
                                    EvidenceSide fragment_side, uint64_t seed) {
    if (fragments.size() < 2) throw NotFragmentable("need at least two facts");

    Scenario s;
    s.question_id = example.question_id;
    s.question = example.question;
    s.kind = ScenarioKind::Fragmented;
    s.seed = seed;
    s.params["fragment_side"] =
        fragment_side == EvidenceSide::MemorySide ? "MemorySide" : "CounterSide";

    Stance frag_stance = fragment_side == EvidenceSide::MemorySide ? Stance::SupportsMemory
                                                                   : Stance::SupportsCounter;
    for (auto& fact : fragments)
        s.evidence.push_back(make_evidence(fact, frag_stance, Origin::Human, Granularity::Fragment));

    if (fragment_side == EvidenceSide::MemorySide) {
        s.evidence.push_back(
            make_evidence(example.counter_memory, Stance::SupportsCounter, Origin::Generated));
    } else {
        s.evidence.push_back(
            make_evidence(example.parametric_memory, Stance::SupportsMemory, Origin::Elicited));
    }
    detail::shuffle_evidence(s.evidence, seed);
    s.options = build_options(example, seed);
    s.scenario_id = detail::scenario_id(example, s.kind, s.params["fragment_side"]);
    return s;
}

inline std::string join_fragments(const std::vector<std::string>& fragments) {
    std::string out;
    for (size_t i = 0; i < fragments.size(); ++i) {
        if (i) out += "\n\n";
        out += fragments[i];
    }
    return out;
}

inline CompletionRequest build_preference_prompt(const Scenario& s) {
    std::string prompt =
        "According to the given information, choose the best choice from the following "
        "options.\n\nInformation:\n";
    for (size_t i = 0; i < s.evidence.size(); ++i)
        prompt += std::to_string(i + 1) + ". " + s.evidence[i].text + "\n";
    prompt += "\nQuestion:\n" + s.question + "\n\nOptions:\n";
    for (auto& opt : s.options)
        prompt += std::string(1, opt.label) + ". " + opt.option_text + "\n";
    prompt += "\nAnswer:";
    return CompletionRequest::user(prompt);
}

/// Precedence: sole leading label letter; unique "X." / "X)" mention;
/// unique option text echoed verbatim; otherwise Unparseable.
inline Choice parse_choice(const std::string& response, const std::vector<ScenarioOption>& options) {
    if (options.empty()) throw ConfigError("options must be non-empty");
    auto kind_to_choice = [](OptionKind k) {
        switch (k) {
            case OptionKind::MemoryAnswer: return Choice::MemoryAnswer;
            case OptionKind::CounterAnswer: return Choice::CounterAnswer;
            case OptionKind::Uncertain: return Choice::Uncertain;
            case OptionKind::IrrelevantOption: return Choice::IrrelevantOption;
        }
        return Choice::Unparseable;
    };

    std::string trimmed = text::trim(response);
    if (trimmed.size() == 1) {
        for (auto& opt : options)
            if (trimmed[0] == opt.label) return kind_to_choice(opt.kind);
    }
    if (!trimmed.empty()) {
        // leading "A." / "A)" / "A:" / "A " prefix
        char head = trimmed[0];
        if (trimmed.size() >= 2 &&
            (trimmed[1] == '.' || trimmed[1] == ')' || trimmed[1] == ':' || trimmed[1] == ' ')) {
            for (auto& opt : options)
                if (head == opt.label) return kind_to_choice(opt.kind);
        }
    }

    // unique label letter followed by '.' or ')', at a word boundary
    std::vector<char> hits;
    for (auto& opt : options) {
        for (size_t pos = 0; pos + 1 < trimmed.size(); ++pos) {
            if (trimmed[pos] != opt.label) continue;
            if (trimmed[pos + 1] != '.' && trimmed[pos + 1] != ')') continue;
            if (pos > 0 && std::isalnum(static_cast<unsigned char>(trimmed[pos - 1]))) continue;
            if (hits.empty() || hits.back() != opt.label) hits.push_back(opt.label);
            break;
        }
    }
    if (hits.size() == 1) {
        for (auto& opt : options)
            if (opt.label == hits[0]) return kind_to_choice(opt.kind);
    }

    // unique option text contained verbatim
    const ScenarioOption* match = nullptr;
    int matches = 0;
    for (auto& opt : options) {
        if (!opt.option_text.empty() && trimmed.find(opt.option_text) != std::string::npos) {
            ++matches;
            match = &opt;
        }
    }
    if (matches == 1) return kind_to_choice(match->kind);
    return Choice::Unparseable;
}

inline TrialResult execute(const Scenario& s, Gateway& gw) {
    auto rec = gw.complete(build_preference_prompt(s));
    TrialResult r;
    r.scenario_id = s.scenario_id;
    r.raw_response = rec.response_text;
    r.choice = parse_choice(rec.response_text, s.options);
    return r;
}

// ---- JSON serialization for scenarios/<kind>.jsonl and trials/<kind>.jsonl

inline nlohmann::json to_json(const EvidenceItem& e) {
    return {{"text", e.text},
            {"stance", to_string(e.stance)},
            {"origin", to_string(e.origin)},
            {"granularity", e.granularity == Granularity::Whole ? "Whole" : "Fragment"},
            {"length_units", e.length_units}};
}

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json j;
    j["scenario_id"] = s.scenario_id;
    j["question_id"] = s.question_id;
    j["question"] = s.question;
    j["kind"] = to_string(s.kind);
    j["params"] = s.params;
    j["seed"] = s.seed;
    auto ev = nlohmann::json::array();
    for (auto& e : s.evidence) ev.push_back(to_json(e));
    j["evidence"] = ev;
    auto opts = nlohmann::json::array();
    for (auto& o : s.options)
        opts.push_back({{"label", std::string(1, o.label)},
                        {"kind", to_string(o.kind)},
                        {"text", o.option_text}});
    j["options"] = opts;
    return j;
}

inline nlohmann::json to_json(const TrialResult& t) {
    return {{"scenario_id", t.scenario_id},
            {"raw_response", t.raw_response},
            {"choice", to_string(t.choice)}};
}

}  // namespace conflictforge
