#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <string>
#include <vector>

#include "scra/qa_synthesis.hpp"
#include "scra/stub_backends.hpp"
#include "test_paths.hpp"

using namespace scra;

namespace {

Caption cap(const std::string& text) {
    Caption c;
    c.text = text;
    return c;
}

AnswerCandidate candidate(const std::string& span, PosClass pos,
                          std::optional<std::string> adj_type = std::nullopt) {
    AnswerCandidate c;
    c.span = span;
    c.pos = pos;
    c.adj_type = std::move(adj_type);
    return c;
}

} // namespace

TEST_CASE("extract_answer_candidates: golden parses of fixed sentences") {
    RuleBasedPosParser parser;
    SECTION("a red ball") {
        auto cands = extract_answer_candidates(cap("a red ball"), parser);
        REQUIRE(cands.size() == 2);
        REQUIRE(cands[0].span == "ball");
        REQUIRE(cands[0].pos == PosClass::noun);
        REQUIRE(cands[1].span == "red");
        REQUIRE(cands[1].pos == PosClass::adjective);
        REQUIRE(cands[1].adj_type == std::optional<std::string>("color"));
    }
    SECTION("running") {
        auto cands = extract_answer_candidates(cap("running"), parser);
        REQUIRE(cands.size() == 1);
        REQUIRE(cands[0].span == "running");
        REQUIRE(cands[0].pos == PosClass::verb);
    }
    SECTION("empty caption is rejected") {
        REQUIRE_THROWS_AS(extract_answer_candidates(cap("   "), parser), validation_error);
    }
    SECTION("duplicates by (span, pos) are removed") {
        auto cands = extract_answer_candidates(cap("a dog and a dog on grass"), parser);
        REQUIRE(cands.size() == 2); // dog, grass
        REQUIRE(cands[0].span == "dog");
        REQUIRE(cands[1].span == "grass");
    }
    SECTION("source caption index is propagated") {
        auto cands = extract_answer_candidates(cap("a red ball"), parser, 4);
        for (const auto& c : cands) REQUIRE(c.source_caption_index == 4);
    }
}

TEST_CASE("instantiate_questions: exact template counts and strings per POS") {
    SECTION("noun expands to the two noun templates") {
        auto pairs = instantiate_questions(candidate("ball", PosClass::noun));
        REQUIRE(pairs.size() == 2);
        REQUIRE(pairs[0].question == "What item is this in this picture?");
        REQUIRE(pairs[1].question == "What item is that in this picture?");
        for (const auto& p : pairs) REQUIRE(p.answer == "ball");
    }
    SECTION("verb expands to four templates") {
        auto pairs = instantiate_questions(candidate("running", PosClass::verb));
        REQUIRE(pairs.size() == 4);
        REQUIRE(pairs[0].question == "What action is being taken in this picture?");
        REQUIRE(pairs[1].question == "Why is this item in this picture?");
        REQUIRE(pairs[2].question == "Which action is being taken in this picture?");
        REQUIRE(pairs[3].question == "What action is the item doing in this picture?");
        for (const auto& p : pairs) REQUIRE(p.answer == "running");
    }
    SECTION("adjective substitutes the ADJ TYPE placeholder") {
        auto pairs = instantiate_questions(candidate("red", PosClass::adjective, "color"));
        REQUIRE(pairs.size() == 3);
        REQUIRE(pairs[0].question == "How to describe one item in this picture?");
        REQUIRE(pairs[1].question == "What is the item's color in this picture?");
        REQUIRE(pairs[2].question == "What is the color in this picture?");
        for (const auto& p : pairs) REQUIRE(p.answer == "red");
    }
    SECTION("adjective without a type falls back to 'attribute'") {
        auto pairs = instantiate_questions(candidate("shiny", PosClass::adjective));
        REQUIRE(pairs[1].question == "What is the item's attribute in this picture?");
    }
    SECTION("questions end with '?' and template ids are registered") {
        for (PosClass pos : {PosClass::noun, PosClass::verb, PosClass::adjective}) {
            auto pairs = instantiate_questions(candidate("word", pos, "color"));
            for (const auto& p : pairs) {
                REQUIRE(p.question.ends_with("?"));
                REQUIRE(p.template_id.starts_with(to_string(pos) + "/"));
            }
        }
    }
}

TEST_CASE("instantiate_questions: every string is verbatim from the registry after substitution") {
    TemplateRegistry registry = TemplateRegistry::builtin();
    const std::vector<std::pair<std::string, PosClass>> cases = {
        {"dog", PosClass::noun}, {"playing", PosClass::verb}, {"wooden", PosClass::adjective}};
    for (const auto& [span, pos] : cases) {
        auto cand = candidate(span, pos, pos == PosClass::adjective
                                             ? std::optional<std::string>("material")
                                             : std::nullopt);
        auto pairs = instantiate_questions(cand, registry);
        REQUIRE(pairs.size() == registry.templates(pos).size());
        for (const auto& p : pairs) {
            bool verbatim = false;
            for (const auto& tmpl : registry.templates(pos))
                if (substitute_adj_type(tmpl, cand.adj_type.value_or("attribute")) == p.question)
                    verbatim = true;
            REQUIRE(verbatim);
        }
    }
}

TEST_CASE("TemplateRegistry: file round-trip matches the builtin set") {
    TemplateRegistry from_file = TemplateRegistry::load(testpaths::assets("question_templates.txt"));
    TemplateRegistry builtin = TemplateRegistry::builtin();
    for (PosClass pos : {PosClass::noun, PosClass::verb, PosClass::adjective})
        REQUIRE(from_file.templates(pos) == builtin.templates(pos));
}

TEST_CASE("AdjTypeLexicon: file round-trip matches the builtin mapping") {
    AdjTypeLexicon from_file = AdjTypeLexicon::load(testpaths::assets("adj_types.txt"));
    for (const char* w : {"red", "small", "wooden", "round"})
        REQUIRE(from_file.lookup(w) == AdjTypeLexicon::builtin().lookup(w));
    REQUIRE_FALSE(from_file.lookup("shiny").has_value());
}

TEST_CASE("filter_qa_pairs: oracle, adversarial and mixed stubs") {
    Caption caption = cap("a red dog running near the park");
    RuleBasedPosParser parser;
    std::vector<QAPair> pairs;
    for (const auto& cand : extract_answer_candidates(caption, parser, 0))
        for (auto& p : instantiate_questions(cand)) pairs.push_back(std::move(p));
    REQUIRE(pairs.size() == 2 * 2 + 4 + 3); // dog, park nouns; running; red

    SECTION("echoing answerer passes everything") {
        // the filter asks once per pair, in order; echo the expected answer
        size_t cursor = 0;
        FnQaAnswerer echo("echo", [&](const std::string&, const std::string&) {
            return pairs[cursor++].answer;
        });
        FilterOutcome out = filter_qa_pairs(pairs, caption, echo);
        REQUIRE_FALSE(out.degraded);
        REQUIRE(out.pairs.size() == pairs.size());
        for (const auto& p : out.pairs) REQUIRE(p.passed_filter);
    }
    SECTION("adversarial answerer fails everything") {
        FnQaAnswerer wrong("wrong", [](const std::string&, const std::string&) { return "xyz"; });
        FilterOutcome out = filter_qa_pairs(pairs, caption, wrong);
        REQUIRE_FALSE(out.degraded);
        REQUIRE(out.pairs.empty());
    }
    SECTION("noun-only answerer keeps exactly the noun-derived pairs") {
        size_t cursor = 0;
        FnQaAnswerer nouns_only("nouns", [&](const std::string&, const std::string&) {
            const QAPair& p = pairs[cursor++];
            return p.template_id.starts_with("noun/") ? p.answer : std::string("no");
        });
        FilterOutcome out = filter_qa_pairs(pairs, caption, nouns_only);
        REQUIRE_FALSE(out.degraded);
        REQUIRE(out.pairs.size() == 4); // dog x2 templates, park x2 templates
        for (const auto& p : out.pairs) {
            REQUIRE(p.template_id.starts_with("noun/"));
            REQUIRE(p.passed_filter);
        }
    }
    SECTION("output is a subset of the input with passed_filter set") {
        StubQaAnswerer stub;
        FilterOutcome out = filter_qa_pairs(pairs, caption, stub);
        REQUIRE(out.pairs.size() <= pairs.size());
        for (const auto& p : out.pairs) {
            REQUIRE(p.passed_filter);
            bool in_input = false;
            for (const auto& q : pairs)
                if (q.question == p.question && q.answer == p.answer) in_input = true;
            REQUIRE(in_input);
        }
    }
    SECTION("backend failure degrades to pass-through") {
        FnQaAnswerer broken("broken", [](const std::string&, const std::string&) -> std::string {
            throw std::runtime_error("model went away");
        });
        FilterOutcome out = filter_qa_pairs(pairs, caption, broken);
        REQUIRE(out.degraded);
        REQUIRE(out.pairs.size() == pairs.size());
    }
}

TEST_CASE("StubQaAnswerer: answers by POS class and adjective type") {
    StubQaAnswerer stub;
    const std::string ctx = "a small red dog running near the park";
    REQUIRE(stub.answer(ctx, "What item is this in this picture?") == "dog");
    REQUIRE(stub.answer(ctx, "What action is being taken in this picture?") == "running");
    REQUIRE(stub.answer(ctx, "What is the item's color in this picture?") == "red");
    REQUIRE(stub.answer(ctx, "What is the item's size in this picture?") == "small");
    REQUIRE(stub.answer(ctx, "Is this off-template?") == "unknown");
}

TEST_CASE("synthesize_qa_pairs: rerank order and the hard cap") {
    RuleBasedPosParser parser;
    TemplateRegistry registry = TemplateRegistry::builtin();
    std::vector<Caption> ranked = {cap("a red dog running near the park"),
                                   cap("a wooden table near the kitchen"),
                                   cap("a small bird flying near the beach")};
    SECTION("pairs come out grouped by caption rank") {
        auto pairs = synthesize_qa_pairs(ranked, parser, registry, 1000);
        int last_caption = 0;
        for (const auto& p : pairs) {
            REQUIRE(p.source_caption_index >= last_caption);
            last_caption = p.source_caption_index;
        }
    }
    SECTION("cap truncates") {
        auto pairs = synthesize_qa_pairs(ranked, parser, registry, 5);
        REQUIRE(pairs.size() == 5);
        for (const auto& p : pairs) REQUIRE(p.source_caption_index == 0);
    }
    SECTION("synthesis is deterministic") {
        auto a = synthesize_qa_pairs(ranked, parser, registry, 30);
        auto b = synthesize_qa_pairs(ranked, parser, registry, 30);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].question == b[i].question);
            REQUIRE(a[i].answer == b[i].answer);
        }
    }
}
