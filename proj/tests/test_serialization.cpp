#include <catch2/catch_amalgamated.hpp>

#include "scra/serialization.hpp"

using namespace scra;

TEST_CASE("RelevanceMap: cache-record round-trip") {
    RelevanceMap rel;
    rel.scores = Eigen::VectorXd(4);
    rel.scores << 0.5, 0.0, -0.25, 1.75;
    rel.rectify_mode = RectifyMode::negative;
    rel.image_id = "img-9";
    rel.question_id = "q-9";

    json j = rel;
    RelevanceMap back = j.get<RelevanceMap>();
    REQUIRE(back.scores.size() == rel.scores.size());
    for (Eigen::Index i = 0; i < rel.scores.size(); ++i)
        REQUIRE(back.scores[i] == rel.scores[i]);
    REQUIRE(back.rectify_mode == rel.rectify_mode);
    REQUIRE(back.image_id == rel.image_id);
    REQUIRE(back.question_id == rel.question_id);

    SECTION("empty scores survive") {
        RelevanceMap empty;
        json je = empty;
        REQUIRE(je.get<RelevanceMap>().scores.size() == 0);
    }
}

TEST_CASE("PatchSelection and CaptionSelection: lossless payloads") {
    PatchSelection sel;
    sel.indices = {5, 1, 9};
    sel.k = 3;
    sel.strategy = PatchStrategy::weighted_sample;
    sel.seed = 777;
    sel.uniform_fallback = true;
    json j = sel;
    PatchSelection back = j.get<PatchSelection>();
    REQUIRE(back.indices == sel.indices);
    REQUIRE(back.k == sel.k);
    REQUIRE(back.strategy == sel.strategy);
    REQUIRE(back.seed == sel.seed);
    REQUIRE(back.uniform_fallback == sel.uniform_fallback);

    CaptionSelection cs;
    cs.ordered = {2, 0};
    cs.k = 2;
    json jc = cs;
    REQUIRE(jc.get<CaptionSelection>().ordered == cs.ordered);
}

TEST_CASE("Caption, QAPair, Summary, AnswerPrediction: lossless payloads") {
    Caption c;
    c.text = "a red ball";
    c.patch_indices = {3, 4};
    c.backend_id = "stub";
    c.gen_index = 7;
    json jc = c;
    Caption cb = jc.get<Caption>();
    REQUIRE(cb.text == c.text);
    REQUIRE(cb.patch_indices == c.patch_indices);
    REQUIRE(cb.gen_index == c.gen_index);

    QAPair q{"What item is this in this picture?", "ball", "noun/0", 2, true};
    json jq = q;
    QAPair qb = jq.get<QAPair>();
    REQUIRE(qb.question == q.question);
    REQUIRE(qb.answer == q.answer);
    REQUIRE(qb.template_id == q.template_id);
    REQUIRE(qb.source_caption_index == q.source_caption_index);
    REQUIRE(qb.passed_filter == q.passed_filter);

    Summary s;
    s.text = "a summary";
    s.target_length = 100;
    s.backend_id = "stub-llm";
    s.source_caption_indices = {0, 1};
    s.degraded = true;
    json js = s;
    Summary sb = js.get<Summary>();
    REQUIRE(sb.text == s.text);
    REQUIRE(sb.target_length == s.target_length);
    REQUIRE(sb.degraded == s.degraded);

    AnswerPrediction p;
    p.raw = "A dog.";
    p.normalized = "dog";
    p.prompt_hash = "abc123";
    p.backend_id = "stub-llm";
    p.decode.max_new_tokens = 12;
    p.empty_answer = false;
    json jp = p;
    AnswerPrediction pb = jp.get<AnswerPrediction>();
    REQUIRE(pb.raw == p.raw);
    REQUIRE(pb.normalized == p.normalized);
    REQUIRE(pb.prompt_hash == p.prompt_hash);
    REQUIRE(pb.decode.max_new_tokens == p.decode.max_new_tokens);
}
