#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "scra/captioning.hpp"
#include "scra/stub_backends.hpp"

using namespace scra;

namespace {

PatchSelection selection_of(std::vector<int> ids) {
    PatchSelection sel;
    sel.indices = std::move(ids);
    sel.k = static_cast<int>(sel.indices.size());
    return sel;
}

Caption cap(const std::string& text) {
    Caption c;
    c.text = text;
    return c;
}

// Brute-force duplicate oracle over the dedup key.
std::vector<Caption> oracle_dedup(const std::vector<Caption>& in) {
    std::vector<Caption> out;
    for (size_t i = 0; i < in.size(); ++i) {
        bool dup = false;
        for (size_t j = 0; j < i && !dup; ++j)
            dup = caption_dedup_key(in[i].text) == caption_dedup_key(in[j].text);
        if (!dup) out.push_back(in[i]);
    }
    return out;
}

} // namespace

TEST_CASE("generate_captions: scripted single caption") {
    ScriptedCaptioner backend(36);
    backend.script("img", {"a dog on grass"});
    auto captions = generate_captions("img", selection_of({3}), 1, backend, 0);
    REQUIRE(captions.size() == 1);
    REQUIRE(captions[0].text == "a dog on grass");
    REQUIRE(captions[0].patch_indices == std::vector<int>{3});
    REQUIRE(captions[0].backend_id == "scripted-captioner");
}

TEST_CASE("generate_captions: thirty scripted strings come back in order") {
    ScriptedCaptioner backend(36);
    std::vector<std::string> script;
    for (int i = 0; i < 30; ++i) script.push_back("caption number " + std::to_string(i));
    backend.script("img", script);
    auto captions = generate_captions("img", selection_of({0, 1, 2, 3, 4}), 30, backend, 0);
    REQUIRE(captions.size() == 30);
    for (int i = 0; i < 30; ++i) {
        REQUIRE(captions[static_cast<size_t>(i)].gen_index == i);
        REQUIRE(captions[static_cast<size_t>(i)].text == script[static_cast<size_t>(i)]);
    }
}

TEST_CASE("generate_captions: conditioning covers sampled patches then whole image") {
    StubCaptioner backend(36);
    auto captions = generate_captions("img", selection_of({7, 11, 2}), 5, backend, 0);
    REQUIRE(captions.size() == 5);
    REQUIRE(captions[0].patch_indices == std::vector<int>{7});
    REQUIRE(captions[1].patch_indices == std::vector<int>{11});
    REQUIRE(captions[2].patch_indices == std::vector<int>{2});
    REQUIRE(captions[3].patch_indices.empty()); // whole image
    REQUIRE(captions[4].patch_indices == std::vector<int>{7}); // cycles
}

TEST_CASE("generate_captions: deterministic stub is bit-identical across runs") {
    StubCaptioner a(576), b(576);
    auto first = generate_captions("image_42", selection_of({1, 5, 9}), 8, a, 7);
    auto second = generate_captions("image_42", selection_of({1, 5, 9}), 8, b, 7);
    REQUIRE(first.size() == second.size());
    for (size_t i = 0; i < first.size(); ++i) {
        REQUIRE(first[i].text == second[i].text);
        REQUIRE(first[i].patch_indices == second[i].patch_indices);
        REQUIRE(first[i].gen_index == second[i].gen_index);
    }
}

TEST_CASE("generate_captions: error paths") {
    SECTION("n below one") {
        StubCaptioner backend(36);
        REQUIRE_THROWS_AS(generate_captions("img", {}, 0, backend, 0), validation_error);
    }
    SECTION("patch id outside the grid") {
        StubCaptioner backend(36);
        REQUIRE_THROWS_AS(generate_captions("img", selection_of({36}), 1, backend, 0),
                          validation_error);
    }
    SECTION("no usable captions") {
        ScriptedCaptioner backend(36);
        backend.script("img", {"   "});
        REQUIRE_THROWS_AS(generate_captions("img", selection_of({0}), 2, backend, 0),
                          empty_caption_error);
    }
    SECTION("backend failure carries the backend id") {
        StubCaptioner backend(36);
        backend.fail_for("img");
        try {
            generate_captions("img", selection_of({0}), 1, backend, 0);
            FAIL("expected backend_error");
        } catch (const backend_error& e) {
            REQUIRE(e.backend_id() == "stub-captioner");
        }
    }
}

TEST_CASE("dedup_captions: case and punctuation duplicates collapse") {
    auto out = dedup_captions({cap("A dog."), cap("a dog")});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].text == "A dog."); // first occurrence wins
}

TEST_CASE("dedup_captions: empty input") {
    REQUIRE(dedup_captions({}).empty());
}

TEST_CASE("dedup_captions: thirty captions with five duplicates leave twenty-five") {
    std::vector<Caption> input;
    for (int i = 0; i < 25; ++i) input.push_back(cap("unique caption " + std::to_string(i)));
    input.insert(input.begin() + 3, cap("Unique caption 1."));
    input.insert(input.begin() + 8, cap("unique   caption 2"));
    input.insert(input.begin() + 15, cap("UNIQUE CAPTION 5"));
    input.insert(input.begin() + 20, cap("unique caption 7!"));
    input.insert(input.begin() + 27, cap("unique caption 11?"));
    REQUIRE(input.size() == 30);

    auto out = dedup_captions(input);
    auto expected = oracle_dedup(input);
    REQUIRE(out.size() == 25);
    REQUIRE(out.size() == expected.size());
    for (size_t i = 0; i < out.size(); ++i) REQUIRE(out[i].text == expected[i].text);
}

TEST_CASE("dedup_captions: idempotent and order-preserving on random inputs") {
    DeterministicRng rng(404);
    const std::vector<std::string> pool = {"a dog", "A DOG.", "a cat", "the  cat", "a bird!",
                                           "a bird", "one fish", "two fish"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Caption> input;
        const size_t len = 1 + rng.next_index(12);
        for (size_t i = 0; i < len; ++i) input.push_back(cap(pool[rng.next_index(pool.size())]));

        auto once = dedup_captions(input);
        auto twice = dedup_captions(once);
        REQUIRE(once.size() == twice.size());
        for (size_t i = 0; i < once.size(); ++i) REQUIRE(once[i].text == twice[i].text);

        // survivors appear in their original relative order
        size_t cursor = 0;
        for (const auto& survivor : once) {
            while (cursor < input.size() && input[cursor].text != survivor.text) ++cursor;
            REQUIRE(cursor < input.size());
            ++cursor;
        }
    }
}
