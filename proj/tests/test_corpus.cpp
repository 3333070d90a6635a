#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "conflictforge/corpus.hpp"

using namespace conflictforge;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "corpus_" + name + ".jsonl";
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("builtin template table matches the golden patterns") {
    const auto& t = builtin_templates();
    REQUIRE(t.size() == 16);
    const std::vector<std::pair<std::string, std::string>> golden = {
        {"occupation", "[subj]'s occupation is [obj]."},
        {"place_of_birth", "[subj] was born in [obj]."},
        {"genre", "The genre of [subj] is [obj]."},
        {"father", "[obj] is the father of [subj]."},
        {"country", "[subj] is in [obj]."},
        {"producer", "[obj] is the producer of [subj]."},
        {"director", "[obj] is the director of [subj]."},
        {"capital_of", "[subj] is the capital of [obj]."},
        {"screenwriter", "[obj] was the screenwriter for [subj]."},
        {"composer", "[obj] was the composer of [subj]."},
        {"color", "The color of [subj] is [obj]."},
        {"religion", "[obj] is the religion of [subj]."},
        {"sport", "[subj] plays [obj]."},
        {"author", "[obj] is the author of [subj]."},
        {"mother", "[obj] is the mother of [subj]."},
        {"capital", "[obj] is the capital of [subj]."},
    };
    for (auto& [rel, pattern] : golden) {
        REQUIRE(t.count(rel) == 1);
        CHECK(t.at(rel).pattern == pattern);
    }
}

TEST_CASE("render_claim substitutes both placeholders exactly once") {
    CHECK(render_claim({"George Rankin", "occupation", "politician"}, builtin_templates()) ==
          "George Rankin's occupation is politician.");
    CHECK(render_claim({"Lourdes", "country", "France"}, builtin_templates()) ==
          "Lourdes is in France.");
    CHECK(render_claim({"Hamlet", "author", "William Shakespeare"}, builtin_templates()) ==
          "William Shakespeare is the author of Hamlet.");
    CHECK_THROWS_AS(render_claim({"x", "sibling", "y"}, builtin_templates()), UnknownRelation);
}

TEST_CASE("render_claim property: subject and object both appear, placeholders vanish") {
    std::mt19937_64 rng(42);
    std::vector<std::string> relations;
    for (auto& [rel, _] : builtin_templates()) relations.push_back(rel);
    for (int i = 0; i < 200; ++i) {
        std::string subj = "Subj" + std::to_string(rng() % 1000);
        std::string obj = "Obj" + std::to_string(rng() % 1000);
        auto& rel = relations[rng() % relations.size()];
        auto claim = render_claim({subj, rel, obj}, builtin_templates());
        CHECK(claim.find(subj) != std::string::npos);
        CHECK(claim.find(obj) != std::string::npos);
        CHECK(claim.find("[subj]") == std::string::npos);
        CHECK(claim.find("[obj]") == std::string::npos);
    }
}

TEST_CASE("template JSON round-trip preserves every pattern") {
    auto j = templates_to_json(builtin_templates());
    auto back = templates_from_json(j);
    REQUIRE(back.size() == builtin_templates().size());
    for (auto& [rel, t] : builtin_templates()) CHECK(back.at(rel).pattern == t.pattern);
}

TEST_CASE("templates_from_json validates placeholders") {
    nlohmann::json missing = {{"capital", "[obj] is the capital."}};
    CHECK_THROWS_AS(templates_from_json(missing), ConfigError);
    nlohmann::json doubled = {{"capital", "[obj] and [obj] of [subj]."}};
    CHECK_THROWS_AS(templates_from_json(doubled), ConfigError);
}

TEST_CASE("entity loader keeps good records and reports diagnostics with line numbers") {
    std::string good1 =
        R"({"id":"e1","question":"Q1?","ground_truth":["Paris"],"triple":{"subject":"France","relation":"capital","object":"Paris"},"popularity":1200})";
    std::string malformed = "{not json";
    std::string missing = R"({"id":"e2","question":"Q2?","ground_truth":["X"]})";
    std::string dup =
        R"({"id":"e1","question":"Q3?","ground_truth":["Y"],"triple":{"subject":"A","relation":"capital","object":"Y"}})";
    std::string neg_pop =
        R"({"id":"e4","question":"Q4?","ground_truth":["Z"],"triple":{"subject":"B","relation":"capital","object":"Z"},"popularity":-5})";
    std::string good2 =
        R"({"id":"e5","question":"Q5?","ground_truth":["Rome","roma"],"triple":{"subject":"Italy","relation":"capital","object":"Rome"}})";
    auto path = write_temp("entity", good1 + "\n" + malformed + "\n" + missing + "\n" + dup +
                                         "\n" + neg_pop + "\n" + good2 + "\n");
    auto res = load_entity_dataset(path);
    std::remove(path.c_str());

    REQUIRE(res.questions.size() == 2);
    CHECK(res.questions[0].id == "e1");
    CHECK(res.questions[0].popularity == 1200);
    CHECK(res.questions[1].ground_truth == std::vector<std::string>{"Rome", "roma"});
    REQUIRE(res.diagnostics.size() == 4);
    CHECK(res.diagnostics[0].line == 2);
    CHECK(res.diagnostics[0].code == "MalformedRecord");
    CHECK(res.diagnostics[1].line == 3);
    CHECK(res.diagnostics[1].code == "MissingField");
    CHECK(res.diagnostics[1].detail == "triple");
    CHECK(res.diagnostics[2].line == 4);
    CHECK(res.diagnostics[2].code == "DuplicateId");
    CHECK(res.diagnostics[3].line == 5);
    CHECK(res.diagnostics[3].code == "MalformedRecord");
    CHECK_FALSE(res.ok());
}

TEST_CASE("entity loader dedups ground-truth aliases by normalized form") {
    std::string rec =
        R"({"id":"e1","question":"Q?","ground_truth":["The Hague","the hague","Den Haag"],"triple":{"subject":"NL","relation":"capital","object":"The Hague"}})";
    auto path = write_temp("alias", rec + "\n");
    auto res = load_entity_dataset(path);
    std::remove(path.c_str());
    REQUIRE(res.questions.size() == 1);
    CHECK(res.questions[0].ground_truth == std::vector<std::string>{"The Hague", "Den Haag"});
}

TEST_CASE("boolean loader validates answers and facts") {
    std::string good = R"({"id":"b1","question":"Q?","answer":"True","facts":["f1","f2"]})";
    std::string bad_answer = R"({"id":"b2","question":"Q?","answer":"Maybe","facts":["f1"]})";
    std::string no_facts = R"({"id":"b3","question":"Q?","answer":"False","facts":[]})";
    std::string default_id = R"({"question":"Q?","answer":"False","facts":["f1"]})";
    auto path = write_temp("bool", good + "\n" + bad_answer + "\n" + no_facts + "\n" +
                                       default_id + "\n");
    auto res = load_boolean_dataset(path);
    std::remove(path.c_str());
    REQUIRE(res.questions.size() == 2);
    CHECK(res.questions[0].id == "b1");
    CHECK(res.questions[0].kind == QuestionKind::Boolean);
    CHECK(res.questions[0].ground_truth == std::vector<std::string>{"True"});
    CHECK(res.questions[1].id == "b4");  // synthesized from the line number
    REQUIRE(res.diagnostics.size() == 2);
    CHECK(res.diagnostics[0].code == "NonBooleanAnswer");
    CHECK(res.diagnostics[1].code == "MissingField");
}

TEST_CASE("entity catalog: first-occurrence order and normalized dedup") {
    auto make = [](std::string id, std::string rel, std::string obj) {
        SourceQuestion q;
        q.id = std::move(id);
        q.kind = QuestionKind::Entity;
        q.triple = Triple{"s", std::move(rel), std::move(obj)};
        return q;
    };
    std::vector<SourceQuestion> qs = {
        make("1", "capital", "Paris"),  make("2", "capital", "Rome"),
        make("3", "capital", "paris"),  // dup by normalization
        make("4", "capital", "The Hague"), make("5", "genre", "jazz"),
    };
    auto cat = build_entity_catalog(qs);
    REQUIRE(cat.pool("capital") != nullptr);
    CHECK(*cat.pool("capital") == std::vector<std::string>{"Paris", "Rome", "The Hague"});
    CHECK(*cat.pool("genre") == std::vector<std::string>{"jazz"});
    CHECK(cat.pool("author") == nullptr);

    // pool membership is invariant under input permutation, up to the
    // normalized form (the surviving surface form is first-occurrence)
    auto normalized_set = [](const std::vector<std::string>& v) {
        std::set<std::string> out;
        for (auto& e : v) out.insert(text::normalize(e));
        return out;
    };
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto shuffled = qs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto cat2 = build_entity_catalog(shuffled);
        CHECK(normalized_set(*cat2.pool("capital")) == normalized_set(*cat.pool("capital")));
        CHECK(cat2.pool("capital")->size() == cat.pool("capital")->size());
    }
}
