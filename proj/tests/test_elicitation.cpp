#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "conflictforge/elicitation.hpp"

using namespace conflictforge;

namespace {

SourceQuestion entity_question() {
    SourceQuestion q;
    q.id = "e1";
    q.kind = QuestionKind::Entity;
    q.question = "What is the capital of France?";
    q.ground_truth = {"Paris"};
    return q;
}

SourceQuestion boolean_question(std::string truth = "True") {
    SourceQuestion q;
    q.id = "b1";
    q.kind = QuestionKind::Boolean;
    q.question = "Is water wet?";
    q.ground_truth = {std::move(truth)};
    return q;
}

}  // namespace

TEST_CASE("closed-book prompt golden strings") {
    auto q = entity_question();
    CHECK(build_closed_book_prompt(q, PromptStyle::AnswerFirst).messages.back().content ==
          "The first paragraph answers the question and the second paragraph gives the reason."
          "\n\nQuestion:\nWhat is the capital of France?\nAnswer:");
    CHECK(build_closed_book_prompt(q, PromptStyle::EvidenceSplit).messages.back().content ==
          "In the first paragraph, you are expected to answer the question. And in the second "
          "paragraph, you should give the evidence."
          "\n\nQuestion:\nWhat is the capital of France?\nAnswer:");

    auto b = boolean_question();
    CHECK(build_closed_book_prompt(b, PromptStyle::AnswerFirst).messages.back().content ==
          "The first paragraph answers the question \"True\" or \"False\" and the second "
          "paragraph gives the reason."
          "\n\nQuestion:\nIs water wet?\nAnswer:");
    CHECK(build_closed_book_prompt(b, PromptStyle::EvidenceSplit).messages.back().content ==
          "In the first paragraph, you are expected to answer the question \"True\" or "
          "\"False\". And in the second paragraph, you should give the evidence."
          "\n\nQuestion:\nIs water wet?\nAnswer:");
}

TEST_CASE("two-paragraph parsing") {
    auto p = parse_two_paragraph("Paris.\n\nParis has been the capital since 987.");
    REQUIRE(p);
    CHECK(p->answer == "Paris.");
    CHECK(p->memory == "Paris has been the capital since 987.");

    SUBCASE("single paragraph is illegal") {
        CHECK_FALSE(parse_two_paragraph("Paris is the capital."));
        CHECK_FALSE(parse_two_paragraph(""));
        CHECK_FALSE(parse_two_paragraph("   \n   \n  "));
    }
    SUBCASE("three or more paragraphs are re-joined") {
        auto r = parse_two_paragraph("A.\n\nB first.\n\nB second.");
        REQUIRE(r);
        CHECK(r->answer == "A.");
        CHECK(r->memory == "B first.\n\nB second.");
    }
    SUBCASE("extra blank lines and padding are tolerated") {
        auto r = parse_two_paragraph("  A.  \n\n\n\n  B.  \n");
        REQUIRE(r);
        CHECK(r->answer == "A.");
        CHECK(r->memory == "B.");
    }
    SUBCASE("multi-line paragraphs keep internal newlines") {
        auto r = parse_two_paragraph("A line1\nA line2\n\nB.");
        REQUIRE(r);
        CHECK(r->answer == "A line1\nA line2");
    }
}

TEST_CASE("abstention lexicon") {
    CHECK(is_abstention("Unknown."));
    CHECK(is_abstention("I don't know the answer."));
    CHECK(is_abstention("I DO NOT KNOW"));
    CHECK(is_abstention("There is no information about this."));
    CHECK(is_abstention("I'm not sure."));
    CHECK_FALSE(is_abstention("Paris."));
    CHECK(is_abstention("The unknown soldier memorial is in Paris."));  // substring policy

    // custom lexicon replaces, not extends
    CHECK_FALSE(is_abstention("Unknown.", {"cannot answer"}));
    CHECK(is_abstention("I cannot answer that.", {"cannot answer"}));
}

TEST_CASE("entity answers classify by normalized alias containment") {
    auto q = entity_question();
    CHECK(classify_answer("Paris.", q) == Verdict::Correct);
    CHECK(classify_answer("The capital is paris", q) == Verdict::Correct);
    CHECK(classify_answer("It is The Paris", q) == Verdict::Correct);  // article stripped
    CHECK(classify_answer("Lyon.", q) == Verdict::Wrong);
    CHECK(classify_answer("Unknown.", q) == Verdict::Unknown);  // abstention wins

    q.ground_truth = {"New York City", "NYC"};
    CHECK(classify_answer("its   new  york   city of course", q) == Verdict::Correct);
    CHECK(classify_answer("NYC", q) == Verdict::Correct);
}

TEST_CASE("boolean answers classify by true/false token") {
    auto q = boolean_question("True");
    CHECK(classify_answer("True.", q) == Verdict::Correct);
    CHECK(classify_answer("false", q) == Verdict::Wrong);
    CHECK(classify_answer("It could be true or false.", q) == Verdict::Unknown);
    CHECK(classify_answer("Yes.", q) == Verdict::Unknown);  // neither token

    auto f = boolean_question("False");
    CHECK(classify_answer("False.", f) == Verdict::Correct);
    CHECK(classify_answer("True.", f) == Verdict::Wrong);
}

TEST_CASE("classification is invariant under whitespace and case noise") {
    auto q = entity_question();
    CHECK(classify_answer("  PARIS  ", q) == classify_answer("paris", q));
    CHECK(classify_answer("\tParis\n", q) == Verdict::Correct);
}

TEST_CASE("elicit composes prompt, parse and classify through the gateway") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "cf_elicit";
    fs::remove_all(dir);

    auto q = entity_question();
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script(build_closed_book_prompt(q, PromptStyle::AnswerFirst).messages.back().content,
                    "Paris.\n\nParis has been the capital of France for centuries.");
    EndpointConfig ep;
    ep.name = "subject";
    ep.base_url = "scripted://";
    ep.model = "m";
    Gateway gw(dir, backend, ep);

    auto rec = elicit(q, gw);
    CHECK(rec.question_id == "e1");
    CHECK(rec.verdict == Verdict::Correct);
    CHECK(rec.memory_answer == "Paris.");
    CHECK(rec.parametric_memory == "Paris has been the capital of France for centuries.");

    // illegal single-paragraph response
    auto q2 = entity_question();
    q2.id = "e2";
    q2.question = "What is the capital of Spain?";
    backend->script(build_closed_book_prompt(q2, PromptStyle::AnswerFirst).messages.back().content,
                    "Madrid is the capital of Spain.");
    auto rec2 = elicit(q2, gw);
    CHECK(rec2.verdict == Verdict::Illegal);
    CHECK(rec2.memory_answer.empty());
    fs::remove_all(dir);
}

TEST_CASE("verdict proportion fixture renders the reference distribution") {
    // 1000 closed-book verdicts at the reference split
    size_t correct = 446, wrong = 444, unknown = 110;
    size_t total = correct + wrong + unknown;
    REQUIRE(total == 1000);
    CHECK(static_cast<double>(correct) / total == doctest::Approx(0.446));
    CHECK(static_cast<double>(wrong) / total == doctest::Approx(0.444));
    CHECK(static_cast<double>(unknown) / total == doctest::Approx(0.110));
}

TEST_CASE("verdict string round-trip") {
    for (auto v : {Verdict::Correct, Verdict::Wrong, Verdict::Unknown, Verdict::Illegal})
        CHECK(verdict_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(verdict_from_string("Maybe"), ConfigError);
}
