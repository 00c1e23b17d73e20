#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "scra/stub_backends.hpp"
#include "scra/summarize.hpp"
#include "scra/text.hpp"

using namespace scra;

namespace {

Caption cap(const std::string& text) {
    Caption c;
    c.text = text;
    return c;
}

std::string words(int n, const std::string& stem = "word") {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += " ";
        out += stem + std::to_string(i);
    }
    return out;
}

} // namespace

TEST_CASE("reference tokenizer counts words and punctuation") {
    REQUIRE(reference_token_count("a dog on grass") == 4);
    REQUIRE(reference_token_count("a dog, on grass.") == 6);
    REQUIRE(reference_token_count("") == 0);
    REQUIRE(reference_token_count("  spaced   out  ") == 2);
}

TEST_CASE("truncate_to_tokens prefers a sentence boundary inside the window") {
    const std::string text = "First sentence here. Second sentence is longer. Third one";
    // window of 8 tokens covers "First sentence here. Second sentence is longer" (without the final '.')
    std::string cut = truncate_to_tokens(text, 8);
    REQUIRE(cut == "First sentence here.");
    REQUIRE(reference_token_count(cut) <= 8);
}

TEST_CASE("truncate_to_tokens hard-cuts when no boundary exists") {
    std::string cut = truncate_to_tokens(words(50), 10);
    REQUIRE(reference_token_count(cut) == 10);
    REQUIRE(cut.ends_with("word9"));
}

TEST_CASE("summarize: single caption echoed by the stub") {
    FnCompleter echo("echo", [](const std::string&, int, uint64_t) {
        return std::string("a dog on grass");
    });
    Summary s = summarize({cap("a dog on grass")}, 32, echo, 0);
    REQUIRE(s.text == "a dog on grass");
    REQUIRE_FALSE(s.degraded);
    REQUIRE(s.target_length == 32);
    REQUIRE(s.backend_id == "echo");
}

TEST_CASE("summarize: prompt carries the length budget and the captions") {
    std::string seen;
    FnCompleter spy("spy", [&](const std::string& prompt, int, uint64_t) {
        seen = prompt;
        return std::string("fine");
    });
    summarize({cap("a red ball"), cap("a green field")}, 48, spy, 0);
    REQUIRE(seen ==
            "Summarize the following image descriptions in at most 48 words, keeping objects, "
            "actions, and attributes: a red ball; a green field");
}

TEST_CASE("summarize: 200-token generation is cut to the slack window at a sentence boundary") {
    // 150 tokens of prose ending mid-way, with a sentence boundary inside the
    // 108-token window
    std::string long_text = words(90) + ". " + words(90, "tail");
    FnCompleter verbose("verbose", [&](const std::string&, int, uint64_t) { return long_text; });
    Summary s = summarize({cap("anything")}, 100, verbose, 0);
    REQUIRE(reference_token_count(s.text) <= 108);
    REQUIRE(s.text.ends_with("."));
    REQUIRE(s.text == words(90) + ".");
}

TEST_CASE("summarize: output never exceeds target plus slack") {
    for (int emitted : {1, 50, 107, 108, 109, 150, 400}) {
        FnCompleter gen("gen", [&](const std::string&, int, uint64_t) { return words(emitted); });
        Summary s = summarize({cap("x")}, 100, gen, 0);
        REQUIRE(reference_token_count(s.text) <= 108);
    }
}

TEST_CASE("summarize: degraded fallback is the top-2 concatenation") {
    FnCompleter broken("broken", [](const std::string&, int, uint64_t) -> std::string {
        throw std::runtime_error("backend down");
    });
    SECTION("two or more captions") {
        Summary s = summarize({cap("a dog on grass"), cap("a red ball"), cap("ignored")}, 32,
                              broken, 0);
        REQUIRE(s.degraded);
        REQUIRE(s.text == "a dog on grass. a red ball");
    }
    SECTION("single caption") {
        Summary s = summarize({cap("a dog on grass")}, 32, broken, 0);
        REQUIRE(s.degraded);
        REQUIRE(s.text == "a dog on grass");
    }
    SECTION("empty generation counts as failure") {
        FnCompleter empty("empty", [](const std::string&, int, uint64_t) { return std::string(); });
        Summary s = summarize({cap("first"), cap("second")}, 32, empty, 0);
        REQUIRE(s.degraded);
        REQUIRE(s.text == "first. second");
    }
}

TEST_CASE("summarize: deterministic for a deterministic backend and fixed seed") {
    StubCompleter stub;
    std::vector<Caption> captions = {cap("a red dog running near the park"),
                                     cap("a wooden table near the kitchen")};
    Summary a = summarize(captions, 40, stub, 7);
    Summary b = summarize(captions, 40, stub, 7);
    REQUIRE(a.text == b.text);
    REQUIRE(a.degraded == b.degraded);
}

TEST_CASE("summarize: preconditions") {
    StubCompleter stub;
    REQUIRE_THROWS_AS(summarize({}, 32, stub, 0), validation_error);
    REQUIRE_THROWS_AS(summarize({cap("x")}, 15, stub, 0), validation_error);
}
