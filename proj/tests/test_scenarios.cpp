#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "conflictforge/scenarios.hpp"

using namespace conflictforge;

namespace {

ConflictExample example() {
    ConflictExample ex;
    ex.question_id = "e1";
    ex.question = "What is the capital of France?";
    ex.memory_answer = "Paris.";
    ex.parametric_memory = "Paris has been the French capital for centuries and hosts the "
                           "government, the parliament and every ministry.";
    ex.counter_answer_claim = "Lyon is the capital of France.";
    ex.counter_memory = "Lyon took over as capital in a sweeping 2019 reform that moved all "
                        "ministries south.";
    ex.popularity = 120000;
    return ex;
}

size_t count_stance(const Scenario& s, Stance stance) {
    size_t n = 0;
    for (auto& e : s.evidence)
        if (e.stance == stance) ++n;
    return n;
}

}  // namespace

TEST_CASE("options: uncertain pinned last, labels consecutive, shuffle near 50/50") {
    auto ex = example();
    size_t memory_first = 0;
    const int trials = 1000;
    for (uint64_t seed = 0; seed < trials; ++seed) {
        auto opts = build_options(ex, seed);
        REQUIRE(opts.size() == 3);
        CHECK(opts.back().kind == OptionKind::Uncertain);
        CHECK(opts.back().option_text == "Uncertain");
        for (size_t i = 0; i < opts.size(); ++i) CHECK(opts[i].label == char('A' + i));
        if (opts[0].kind == OptionKind::MemoryAnswer) ++memory_first;
        // deterministic per seed
        auto again = build_options(ex, seed);
        CHECK(again[0].kind == opts[0].kind);
    }
    // 50% +/- 4 percentage points over 1000 seeds
    CHECK(memory_first > 460);
    CHECK(memory_first < 540);
}

TEST_CASE("irrelevant claims slot between the conflict pair and Uncertain") {
    auto opts = build_options(example(), 3, {"Claim X.", "Claim Y."});
    REQUIRE(opts.size() == 5);
    CHECK(opts[2].kind == OptionKind::IrrelevantOption);
    CHECK(opts[2].option_text == "Claim X.");
    CHECK(opts[3].kind == OptionKind::IrrelevantOption);
    CHECK(opts[4].kind == OptionKind::Uncertain);
}

TEST_CASE("single-source variants") {
    auto ex = example();
    auto gen = scenario_single_source(ex, SingleSourceVariant::Generation, std::nullopt, 5);
    REQUIRE(gen.evidence.size() == 1);
    CHECK(gen.evidence[0].text == ex.counter_memory);
    CHECK(gen.evidence[0].stance == Stance::SupportsCounter);
    CHECK(gen.evidence[0].origin == Origin::Generated);
    CHECK(gen.scenario_id == "e1/SingleSource/Generation");

    auto sub = scenario_single_source(ex, SingleSourceVariant::Substitution,
                                      std::string("Lyon has been the French capital..."), 5);
    CHECK(sub.evidence[0].origin == Origin::Substituted);
    CHECK(sub.scenario_id == "e1/SingleSource/Substitution");

    CHECK_THROWS_AS(scenario_single_source(ex, SingleSourceVariant::Substitution, std::nullopt, 5),
                    MissingVariant);
}

TEST_CASE("multi-source order policies") {
    auto ex = example();
    // fixed policies put the designated side first in 100% of scenarios
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        auto mem_first = scenario_multi_source(ex, OrderPolicy::MemoryFirst, seed);
        REQUIRE(mem_first.evidence.size() == 2);
        CHECK(mem_first.evidence[0].stance == Stance::SupportsMemory);
        CHECK(mem_first.kind == ScenarioKind::OrderProbe);
        auto ctr_first = scenario_multi_source(ex, OrderPolicy::CounterFirst, seed);
        CHECK(ctr_first.evidence[0].stance == Stance::SupportsCounter);
    }
    // random policy balances near 50/50 and is deterministic per seed
    size_t memory_first = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        auto s = scenario_multi_source(ex, OrderPolicy::Random, seed);
        CHECK(s.kind == ScenarioKind::MultiSource);
        if (s.evidence[0].stance == Stance::SupportsMemory) ++memory_first;
        auto again = scenario_multi_source(ex, OrderPolicy::Random, seed);
        CHECK(again.evidence[0].stance == s.evidence[0].stance);
    }
    CHECK(memory_first > 460);
    CHECK(memory_first < 540);
}

TEST_CASE("length-ratio buckets with closed boundaries") {
    auto make = [](size_t mem_tokens, size_t ctr_tokens) {
        ConflictExample ex;
        for (size_t i = 0; i < mem_tokens; ++i) ex.parametric_memory += "m ";
        for (size_t i = 0; i < ctr_tokens; ++i) ex.counter_memory += "c ";
        return ex;
    };
    CHECK(bucket_by_length_ratio(make(7, 10)) == LengthBucket::Below);   // 0.7
    CHECK(bucket_by_length_ratio(make(8, 10)) == LengthBucket::Mid);     // exactly 0.8
    CHECK(bucket_by_length_ratio(make(10, 10)) == LengthBucket::Mid);
    CHECK(bucket_by_length_ratio(make(12, 10)) == LengthBucket::Mid);    // exactly 1.2
    CHECK(bucket_by_length_ratio(make(13, 10)) == LengthBucket::Above);
    CHECK_THROWS_AS(bucket_by_length_ratio(make(0, 10)), ZeroLength);
    CHECK_THROWS_AS(bucket_by_length_ratio(make(10, 0)), ZeroLength);
}

TEST_CASE("answer-as-evidence shortens exactly one side to AnswerOnly") {
    auto ex = example();
    auto mem_short = scenario_answer_as_evidence(ex, EvidenceSide::MemorySide, 9);
    REQUIRE(mem_short.evidence.size() == 2);
    for (auto& e : mem_short.evidence) {
        if (e.stance == Stance::SupportsMemory) {
            CHECK(e.text == ex.memory_answer);
            CHECK(e.origin == Origin::AnswerOnly);
        } else {
            CHECK(e.text == ex.counter_memory);
            CHECK(e.origin == Origin::Generated);
        }
    }
    auto ctr_short = scenario_answer_as_evidence(ex, EvidenceSide::CounterSide, 9);
    for (auto& e : ctr_short.evidence) {
        if (e.stance == Stance::SupportsCounter) {
            CHECK(e.text == ex.counter_answer_claim);
            CHECK(e.origin == Origin::AnswerOnly);
        } else {
            CHECK(e.origin == Origin::Elicited);
        }
    }
}

TEST_CASE("quantity scenarios honor per-side counts and pool limits") {
    auto ex = example();
    ExtraEvidencePool pool;
    pool.memory_side.push_back(make_evidence("Extra memory.", Stance::SupportsMemory, Origin::Generated));
    pool.counter_side.push_back(make_evidence("Extra counter.", Stance::SupportsCounter, Origin::Substituted));

    for (auto [nm, nc] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}, {0, 1}, {1, 0}}) {
        auto s = scenario_quantity(ex, nm, nc, pool, 31);
        CHECK(count_stance(s, Stance::SupportsMemory) == size_t(nm));
        CHECK(count_stance(s, Stance::SupportsCounter) == size_t(nc));
        CHECK(s.params["n_mem"] == nm);
        CHECK(s.params["n_ctr"] == nc);
    }
    CHECK_THROWS_AS(scenario_quantity(ex, 2, 1, ExtraEvidencePool{}, 31), PoolUnderflow);
    CHECK_THROWS_AS(scenario_quantity(ex, 3, 1, pool, 31), ConfigError);
    CHECK_THROWS_AS(scenario_quantity(ex, 0, 0, pool, 31), ConfigError);
}

TEST_CASE("irrelevant retrieval equals brute-force cosine ranking on a 50-sentence corpus") {
    HashingEmbedder embedder;
    std::vector<IrrelevantCandidate> corpus;
    for (int i = 0; i < 50; ++i) {
        std::string topic = (i % 5 == 0) ? "capital city government"
                            : (i % 5 == 1) ? "mountain range geology"
                            : (i % 5 == 2) ? "composer symphony orchestra"
                            : (i % 5 == 3) ? "football league season"
                                           : "novel author literature";
        corpus.push_back({"Sentence " + std::to_string(i) + " about " + topic + " item" +
                              std::to_string(i) + ".",
                          Triple{"Subj" + std::to_string(i), "capital", "Obj" + std::to_string(i)}});
    }
    // a few sentences mention the excluded entities
    corpus[7].sentence += " It also mentions Paris.";
    corpus[21].sentence += " Lyon appears here.";
    std::vector<std::string> excluded = {"Paris", "Lyon"};

    std::vector<std::string> queries = {
        "Which capital hosts the government?", "Who wrote the famous novel?",
        "Which composer led the orchestra?", "Sentence 13 about football league season item13."};
    for (auto& query : queries) {
        auto got = retrieve_irrelevant(query, corpus, 3, embedder, excluded);
        REQUIRE(got.size() == 3);
        for (auto& cand : got)
            for (auto& entity : excluded)
                CHECK_FALSE(text::contains_normalized(cand.sentence, entity));

        // brute-force oracle: full sort by cosine, ties to earlier corpus order
        auto qv = embedder.embed(query);
        std::vector<std::pair<double, size_t>> scored;
        for (size_t i = 0; i < corpus.size(); ++i) {
            bool skip = false;
            for (auto& entity : excluded)
                if (text::contains_normalized(corpus[i].sentence, entity)) skip = true;
            if (skip) continue;
            scored.emplace_back(cosine(qv, embedder.embed(corpus[i].sentence)), i);
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t k = 0; k < 3; ++k) CHECK(got[k].sentence == corpus[scored[k].second].sentence);
    }

    CHECK_THROWS_AS(retrieve_irrelevant("q", corpus, 49, embedder, excluded), CorpusTooSmall);
}

TEST_CASE("irrelevant scenarios render candidate claims as extra options") {
    HashingEmbedder embedder;
    auto ex = example();
    std::vector<IrrelevantCandidate> corpus;
    for (int i = 0; i < 6; ++i)
        corpus.push_back({"Background sentence " + std::to_string(i) + ".",
                          Triple{"Land" + std::to_string(i), "capital", "Town" + std::to_string(i)}});
    auto s = scenario_irrelevant(ex, 1, 2, corpus, embedder, 17, {"Paris", "Lyon"});
    CHECK(count_stance(s, Stance::Irrelevant) == 2);
    CHECK(count_stance(s, Stance::SupportsMemory) == 1);
    size_t irrelevant_options = 0;
    for (auto& opt : s.options)
        if (opt.kind == OptionKind::IrrelevantOption) {
            ++irrelevant_options;
            CHECK(opt.option_text.find("is the capital of") != std::string::npos);
        }
    CHECK(irrelevant_options == 2);
    CHECK(s.options.back().kind == OptionKind::Uncertain);
    CHECK_THROWS_AS(scenario_irrelevant(ex, 1, 4, corpus, embedder, 17, {}), ConfigError);
}

TEST_CASE("fragment round-trip and evidence count") {
    auto ex = example();
    std::vector<std::string> facts = {"Fact one.", "Fact two.", "Fact three."};
    auto s = scenario_fragmented(ex, facts, EvidenceSide::MemorySide, 23);
    CHECK(s.evidence.size() == facts.size() + 1);

    std::vector<std::string> fragments;
    size_t whole = 0;
    for (auto& e : s.evidence) {
        if (e.granularity == Granularity::Fragment) {
            CHECK(e.stance == Stance::SupportsMemory);
        } else {
            ++whole;
            CHECK(e.stance == Stance::SupportsCounter);
            CHECK(e.text == ex.counter_memory);
        }
    }
    CHECK(whole == 1);
    // order-preserving join over the original fact list reproduces the passage
    CHECK(join_fragments(facts) == "Fact one.\n\nFact two.\n\nFact three.");
    CHECK_THROWS_AS(scenario_fragmented(ex, {"only one"}, EvidenceSide::MemorySide, 23),
                    NotFragmentable);
}

TEST_CASE("preference prompt golden") {
    auto ex = example();
    Scenario s;
    s.question = ex.question;
    s.evidence = {make_evidence("First passage.", Stance::SupportsMemory, Origin::Elicited),
                  make_evidence("Second passage.", Stance::SupportsCounter, Origin::Generated)};
    s.options = {{'A', OptionKind::MemoryAnswer, "Paris."},
                 {'B', OptionKind::CounterAnswer, "Lyon is the capital of France."},
                 {'C', OptionKind::Uncertain, "Uncertain"}};
    CHECK(build_preference_prompt(s).messages.back().content ==
          "According to the given information, choose the best choice from the following "
          "options.\n\n"
          "Information:\n1. First passage.\n2. Second passage.\n\n"
          "Question:\nWhat is the capital of France?\n\n"
          "Options:\nA. Paris.\nB. Lyon is the capital of France.\nC. Uncertain\n\nAnswer:");
}

TEST_CASE("choice parsing: 30-case golden set") {
    std::vector<ScenarioOption> opts = {
        {'A', OptionKind::MemoryAnswer, "Paris."},
        {'B', OptionKind::CounterAnswer, "Lyon is the capital of France."},
        {'C', OptionKind::IrrelevantOption, "Nice is in France."},
        {'D', OptionKind::Uncertain, "Uncertain"},
    };
    const std::vector<std::pair<std::string, Choice>> cases = {
        // bare letters
        {"A", Choice::MemoryAnswer},
        {"B", Choice::CounterAnswer},
        {"C", Choice::IrrelevantOption},
        {"D", Choice::Uncertain},
        {" B ", Choice::CounterAnswer},
        // leading label with punctuation
        {"A.", Choice::MemoryAnswer},
        {"B)", Choice::CounterAnswer},
        {"C:", Choice::IrrelevantOption},
        {"D. Uncertain", Choice::Uncertain},
        {"B. Lyon is the capital of France.", Choice::CounterAnswer},
        {"A) Paris.", Choice::MemoryAnswer},
        {"B: because the evidence says so", Choice::CounterAnswer},
        {"A and that is final", Choice::MemoryAnswer},
        // label mentioned mid-sentence
        {"The answer is B.", Choice::CounterAnswer},
        {"I would pick option A. It matches my knowledge.", Choice::MemoryAnswer},
        {"Based on the information, the best choice is D.", Choice::Uncertain},
        {"Option C) fits best.", Choice::IrrelevantOption},
        // option text echoed
        {"Paris.", Choice::MemoryAnswer},
        {"Lyon is the capital of France.", Choice::CounterAnswer},
        {"The correct answer is: Lyon is the capital of France.", Choice::CounterAnswer},
        {"Uncertain", Choice::Uncertain},
        {"I am leaning toward Uncertain here.", Choice::Uncertain},
        {"Nice is in France.", Choice::IrrelevantOption},
        // ambiguity and noise must not parse
        {"", Choice::Unparseable},
        {"E", Choice::Unparseable},
        {"Either A. or B. could be right.", Choice::Unparseable},
        {"It depends entirely on the sources.", Choice::Unparseable},
        {"Paris. Lyon is the capital of France.", Choice::Unparseable},
        {"ABBA.", Choice::Unparseable},
        {"The grade was a B+ overall", Choice::Unparseable},
    };
    REQUIRE(cases.size() == 30);
    for (auto& [response, want] : cases) {
        CAPTURE(response);
        CHECK(parse_choice(response, opts) == want);
    }
}

TEST_CASE("scenario and trial serialization") {
    auto s = scenario_multi_source(example(), OrderPolicy::MemoryFirst, 3);
    auto j = to_json(s);
    CHECK(j["scenario_id"] == "e1/OrderProbe/MemoryFirst");
    CHECK(j["kind"] == "OrderProbe");
    CHECK(j["evidence"].size() == 2);
    CHECK(j["evidence"][0]["stance"] == "SupportsMemory");
    CHECK(j["options"].size() == 3);

    TrialResult t{"e1/OrderProbe/MemoryFirst", "A", Choice::MemoryAnswer};
    auto tj = to_json(t);
    CHECK(tj["choice"] == "MemoryAnswer");
}
