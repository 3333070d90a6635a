#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflictforge/pipeline.hpp"

namespace conflictforge::mock {

/// Twenty-item scripted fixture with a designed funnel: 2 abstentions,
/// 1 illegal response, 2 memory-entailment failures, 1 answer
/// inconsistency, 1 counter-entailment failure; 13 items survive.
struct MockFixture {
    RunConfig cfg;
    std::shared_ptr<ScriptedBackend> backend;  // serves every endpoint
    std::shared_ptr<ScriptedJudge> judge;
};

namespace detail {

inline const std::vector<std::string>& cities() {
    static const std::vector<std::string> v = {
        "Arlun",  "Bexley", "Corvel",  "Dantar", "Elmswood", "Farrow", "Gilden",
        "Harlow", "Ivenna", "Jelko",   "Kesmar", "Lorvin",   "Mabena", "Nerith",
        "Ostrev", "Palmer", "Quorra",  "Rendal", "Sovero",   "Tilvan"};
    return v;
}

inline const std::vector<std::string>& countries() {
    static const std::vector<std::string> v = {
        "Aruveria", "Belaria",  "Cormandia", "Drellia",  "Estovia",  "Ferralia", "Gondavia",
        "Holmgard", "Imbria",   "Jorvania",  "Kaldoria", "Lumeria",  "Morvania", "Nortavia",
        "Oresland", "Panovia",  "Quillia",   "Rostavia", "Serandia", "Tovaria"};
    return v;
}

inline std::string correct_answer(size_t i) {
    return "The capital of " + countries()[i] + " is " + cities()[i] + ".";
}

inline std::string memory_passage(size_t i, size_t city_idx) {
    const std::string& city = cities()[city_idx];
    const std::string& country = countries()[i];
    return city + " has long served as the seat of government of " + country +
           ". Generations of rulers kept their court in " + city +
           ", and every national ministry of " + country + " is headquartered there.";
}

inline std::string counter_passage(const std::string& claim) {
    return claim + " Official registries and contemporary atlases list this fact, and state " +
           "ceremonies have been held there for decades.";
}

inline std::string support_passage(const std::string& claim) {
    return claim + " Archival records and multiple independent gazetteers agree on this point.";
}

}  // namespace detail

inline MockFixture build_mock_fixture(const std::filesystem::path& dir) {
    namespace d = detail;
    std::filesystem::create_directories(dir);

    MockFixture fx;
    fx.backend = std::make_shared<ScriptedBackend>();
    fx.judge = std::make_shared<ScriptedJudge>();
    fx.judge->set_default(NliLabel::Entail);

    // ---- config ----
    RunConfig& cfg = fx.cfg;
    cfg.run_id = "mock";
    cfg.entity_dataset = (dir / "mock_entity.jsonl").string();
    cfg.judge_kind = "scripted";
    cfg.scenario_kinds = {"SingleSource", "MultiSource", "OrderProbe", "AnswerAsEvidence",
                          "Quantity", "IrrelevantMix"};
    for (const char* name : {"subject", "generator"}) {
        EndpointConfig ep;
        ep.name = name;
        ep.base_url = "scripted://mock";
        ep.model = std::string("mock-") + name;
        cfg.endpoints[ep.name] = ep;
    }

    // ---- dataset ----
    std::vector<SourceQuestion> questions;
    {
        std::ofstream out(dir / "mock_entity.jsonl");
        for (size_t i = 0; i < 20; ++i) {
            SourceQuestion q;
            q.id = "q" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
            q.kind = QuestionKind::Entity;
            q.question = "What is the capital of " + d::countries()[i] + "?";
            q.ground_truth = {d::cities()[i]};
            q.triple = Triple{d::countries()[i], "capital", d::cities()[i]};
            q.popularity = static_cast<long long>(std::llround(std::pow(10.0, 2.05 + 0.15 * i)));
            questions.push_back(q);

            nlohmann::json j = {{"id", q.id},
                                {"question", q.question},
                                {"ground_truth", q.ground_truth},
                                {"triple",
                                 {{"subject", q.triple->subject},
                                  {"relation", q.triple->relation},
                                  {"object", q.triple->object}}},
                                {"popularity", *q.popularity}};
            out << j.dump() << "\n";
        }
    }
    auto catalog = build_entity_catalog(questions);

    // ---- elicitation responses ----
    // q01,q02 abstain; q03 is illegal (one paragraph); q08 answers wrong
    // (names the next city); the rest answer correctly.
    std::map<std::string, ElicitationRecord> elicitations;
    for (size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        std::string response;
        if (i < 2) {
            response = "Unknown.\n\nI have no reliable information about " + d::countries()[i] + ".";
        } else if (i == 2) {
            response = d::correct_answer(i);  // single paragraph -> Illegal
        } else if (i == 7) {
            response = "The capital of " + d::countries()[i] + " is " + d::cities()[i + 1] +
                       ".\n\n" + d::memory_passage(i, i + 1);
        } else {
            response = d::correct_answer(i) + "\n\n" + d::memory_passage(i, i);
        }
        fx.backend->script(build_closed_book_prompt(q, PromptStyle::AnswerFirst)
                               .messages.back()
                               .content,
                           response);

        ElicitationRecord rec;
        rec.question_id = q.id;
        rec.raw_response = response;
        if (auto parsed = parse_two_paragraph(response)) {
            rec.memory_answer = parsed->answer;
            rec.parametric_memory = parsed->memory;
            rec.verdict = classify_answer(parsed->answer, q);
        } else {
            rec.verdict = Verdict::Illegal;
        }
        elicitations[q.id] = rec;
    }

    // ---- counter construction (mirrors the forge stage) ----
    std::map<std::string, CounterRecord> counters;
    for (size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const auto& rec = elicitations[q.id];
        if (rec.verdict != Verdict::Correct && rec.verdict != Verdict::Wrong) continue;
        uint64_t seed = conflictforge::detail::mix_seed(fx.cfg.seed, q.id);
        auto [obj, claim] = make_counter_answer_entity(q, rec, catalog, seed);
        CounterRecord cr;
        cr.question_id = q.id;
        cr.counter_object = obj;
        cr.counter_answer_claim = claim;
        cr.method = CounterMethod::Generation;
        cr.counter_memory = d::counter_passage(claim);
        fx.backend->script(build_counter_memory_prompt(claim).messages.back().content,
                           cr.counter_memory);
        try {
            cr.substituted_memory =
                substitute_in_memory(rec.parametric_memory, q.ground_truth, obj).text;
        } catch (const NoMentionFound&) {
        }
        counters[q.id] = cr;
    }

    // ---- consistency responses: q06 flips, everything else repeats ----
    for (size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const auto& rec = elicitations[q.id];
        if (rec.parametric_memory.empty()) continue;
        std::string response;
        if (i == 5) {
            response = "The information provided does not mention the capital of " +
                       d::countries()[i] + ".";
        } else if (i == 7) {
            response = "The capital of " + d::countries()[i] + " is " + d::cities()[i + 1] + ".";
        } else {
            response = d::correct_answer(i);
        }
        fx.backend->script(build_consistency_prompt(q, rec.parametric_memory)
                               .messages.back()
                               .content,
                           response);
    }

    // ---- judge failures: q04,q05 memory side, q07 counter side ----
    for (size_t i : {3, 4}) {
        const auto& rec = elicitations[questions[i].id];
        fx.judge->script(rec.parametric_memory, rec.memory_answer, NliLabel::Neutral, 0.9);
    }
    {
        const auto& cr = counters[questions[6].id];
        fx.judge->script(cr.counter_memory, cr.counter_answer_claim, NliLabel::Contradict, 0.9);
    }

    // ---- surviving examples, in dataset order ----
    std::vector<ConflictExample> kept;
    for (size_t i = 7; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const auto& rec = elicitations[q.id];
        const auto& cr = counters[q.id];
        ConflictExample ex;
        ex.question_id = q.id;
        ex.question = q.question;
        ex.memory_answer = rec.memory_answer;
        ex.parametric_memory = rec.parametric_memory;
        ex.counter_answer_claim = cr.counter_answer_claim;
        ex.counter_memory = cr.counter_memory;
        ex.popularity = q.popularity;
        ex.funnel_status = FunnelStatus::Kept;
        kept.push_back(ex);
    }

    // ---- scenario battery: script one response per preference prompt ----
    static HashingEmbedder embedder;
    BatteryContext ctx;
    ctx.questions = &questions;
    ctx.counters = &counters;
    ctx.kept = &kept;
    ctx.cfg = &fx.cfg;
    ctx.templates = &builtin_templates();
    ctx.embedder = &embedder;
    ctx.memory_extra = [&](const ConflictExample& ex) {
        std::string passage = d::support_passage(ex.memory_answer);
        fx.backend->script(build_counter_memory_prompt(ex.memory_answer).messages.back().content,
                           passage);
        return passage;
    };

    // popular questions stick to memory, unpopular ones follow the evidence
    auto desired_kind = [&](const std::string& question_id) {
        size_t idx = static_cast<size_t>(std::stoi(question_id.substr(1))) - 1;
        return idx >= 14 ? OptionKind::MemoryAnswer : OptionKind::CounterAnswer;
    };
    for (auto& kind : fx.cfg.scenario_kinds) {
        for (auto& s : build_battery(ctx, kind)) {
            OptionKind want = desired_kind(s.question_id);
            char label = 'A';
            for (auto& opt : s.options)
                if (opt.kind == want) label = opt.label;
            fx.backend->script(build_preference_prompt(s).messages.back().content,
                               std::string(1, label));
        }
    }

    return fx;
}

}  // namespace conflictforge::mock
