#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scra/evaluation.hpp"
#include "scra/serialization.hpp"
#include "test_paths.hpp"

using namespace scra;

TEST_CASE("load_okvqa: fixture of three records, ids preserved") {
    auto records = load_okvqa(testpaths::fixtures("okvqa_questions.json"),
                              testpaths::fixtures("okvqa_annotations.json"));
    REQUIRE(records.size() == 3);
    REQUIRE(records[0].question_id == "101");
    REQUIRE(records[1].question_id == "102");
    REQUIRE(records[2].question_id == "103");
    REQUIRE(records[0].question == "What is shown in the picture?");
    REQUIRE(records[0].image_ref == "1111");
    for (const auto& r : records) REQUIRE(r.gt_answers.size() == 10);
}

TEST_CASE("load_okvqa: malformed annotation names the offending record") {
    try {
        load_okvqa(testpaths::fixtures("okvqa_questions.json"),
                   testpaths::fixtures("okvqa_annotations_malformed.json"));
        FAIL("expected ingestion_error");
    } catch (const ingestion_error& e) {
        REQUIRE(std::string(e.what()).find("102") != std::string::npos);
    }
}

TEST_CASE("load_okvqa: missing files raise ingestion errors") {
    REQUIRE_THROWS_AS(load_okvqa("/nonexistent/questions.json", "/nonexistent/annotations.json"),
                      ingestion_error);
}

TEST_CASE("load_aokvqa: fixture filtered to the requested split") {
    auto val = load_aokvqa(testpaths::fixtures("aokvqa_val.json"), "val");
    REQUIRE(val.size() == 5);
    REQUIRE(val[0].question_id == "22MexNkBPpdZGX6sxbxVBH");
    REQUIRE(val[0].gt_answers.size() == 10);
    auto train = load_aokvqa(testpaths::fixtures("aokvqa_val.json"), "train");
    REQUIRE(train.size() == 1);
}

TEST_CASE("load_aokvqa: record without direct answers is an ingestion error") {
    try {
        load_aokvqa(testpaths::fixtures("aokvqa_malformed.json"), "val");
        FAIL("expected ingestion_error");
    } catch (const ingestion_error& e) {
        REQUIRE(std::string(e.what()).find("bbbbbbbbbbbbbbbbbbbbbb") != std::string::npos);
    }
}

TEST_CASE("vqa_soft_accuracy: thirds and saturation") {
    std::vector<std::string> gt = {"dog", "dog", "dog", "cat", "dog",  "a dog",
                                   "cat", "dog", "dog", "dog"};
    REQUIRE(vqa_soft_accuracy("bird", gt) == 0.0);
    REQUIRE(vqa_soft_accuracy("cat", gt) == Catch::Approx(2.0 / 3.0));
    REQUIRE(vqa_soft_accuracy("dog", gt) == 1.0); // 8 matches, saturates

    std::vector<std::string> one = {"red", "blue", "green"};
    REQUIRE(vqa_soft_accuracy("red", one) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("vqa_soft_accuracy: normalization applies to ground truth") {
    std::vector<std::string> gt = {"A dog.", "the dog", "DOG"};
    REQUIRE(vqa_soft_accuracy("dog", gt) == 1.0);
}

TEST_CASE("vqa_soft_accuracy: monotone in match count and capped at one") {
    std::vector<std::string> gt;
    double prev = 0.0;
    for (int matches = 0; matches <= 10; ++matches) {
        gt.assign(10, "other");
        for (int i = 0; i < matches; ++i) gt[static_cast<size_t>(i)] = "hit";
        const double score = vqa_soft_accuracy("hit", gt);
        REQUIRE(score >= prev);
        REQUIRE(score <= 1.0);
        if (matches >= 3) REQUIRE(score == 1.0);
        prev = score;
    }
}

TEST_CASE("vqa_soft_accuracy: empty ground truth is rejected") {
    REQUIRE_THROWS_AS(vqa_soft_accuracy("x", {}), validation_error);
}

namespace {

EvalRecord scored_record(const std::string& id, double score) {
    EvalRecord r;
    r.question_id = id;
    r.question = "q";
    r.gt_answers = {"a"};
    r.score = score;
    return r;
}

} // namespace

TEST_CASE("aggregate: arithmetic examples") {
    REQUIRE(aggregate({scored_record("1", 1.0), scored_record("2", 0.0)}).mean_accuracy == 50.0);
    REQUIRE(aggregate({scored_record("1", 0.0), scored_record("2", 0.0)}).mean_accuracy == 0.0);
}

TEST_CASE("aggregate: ten mixed scores match the hand-summed mean") {
    const std::vector<double> scores = {1.0, 0.0, 2.0 / 3.0, 1.0 / 3.0, 1.0,
                                        0.0, 1.0, 2.0 / 3.0, 0.0, 1.0 / 3.0};
    std::vector<EvalRecord> records;
    double hand_sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        records.push_back(scored_record(std::to_string(i), scores[i]));
        hand_sum += scores[i];
    }
    ResultsTable table = aggregate(records, "cfg", "okvqa", "test");
    REQUIRE(table.mean_accuracy == Catch::Approx(100.0 * hand_sum / 10.0).epsilon(1e-12));
    REQUIRE(table.n_items == 10);
    REQUIRE(format_accuracy(table.mean_accuracy) == "50.0");
}

TEST_CASE("aggregate: permutation-invariant") {
    std::mt19937 rng(17);
    std::vector<EvalRecord> records;
    std::uniform_int_distribution<int> thirds(0, 3);
    for (int i = 0; i < 25; ++i)
        records.push_back(scored_record(std::to_string(i), thirds(rng) / 3.0));
    const double base = aggregate(records).mean_accuracy;
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(records.begin(), records.end(), rng);
        REQUIRE(aggregate(records).mean_accuracy == Catch::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("aggregate: counts flags per record") {
    auto a = scored_record("1", 0.0);
    a.flags = {"failed", "empty-answer"};
    auto b = scored_record("2", 1.0);
    b.flags = {"empty-answer"};
    ResultsTable table = aggregate({a, b});
    REQUIRE(table.flag_counts.at("failed") == 1);
    REQUIRE(table.flag_counts.at("empty-answer") == 2);
}

TEST_CASE("aggregate: empty input is an aggregation error") {
    REQUIRE_THROWS_AS(aggregate({}), aggregation_error);
}

TEST_CASE("records: serialize-then-reload is identity on id, question and answers") {
    auto records = load_okvqa(testpaths::fixtures("okvqa_questions.json"),
                              testpaths::fixtures("okvqa_annotations.json"));
    records[0].prediction.raw = "A dog.";
    records[0].prediction.normalized = "dog";
    records[0].score = 1.0;
    records[0].flags.insert("empty-answer");

    auto dir = testpaths::fresh_tmp_dir("records");
    const std::string path = (dir / "records.jsonl").string();
    write_records_jsonl(records, path);
    auto reloaded = read_records_jsonl(path);

    REQUIRE(reloaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        REQUIRE(reloaded[i].question_id == records[i].question_id);
        REQUIRE(reloaded[i].question == records[i].question);
        REQUIRE(reloaded[i].gt_answers == records[i].gt_answers);
        REQUIRE(reloaded[i].score == records[i].score);
        REQUIRE(reloaded[i].flags == records[i].flags);
        REQUIRE(reloaded[i].prediction.raw == records[i].prediction.raw);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_ablation: failing cells are isolated") {
    std::vector<AblationCell> grid(3);
    grid[0].label = "ok-1";
    grid[1].label = "boom";
    grid[2].label = "ok-2";
    auto results = run_ablation(grid, [](const AblationCell& cell) {
        if (cell.label == "boom") throw std::runtime_error("cell exploded");
        ResultsTable t;
        t.config_id = cell.label;
        t.mean_accuracy = 42.0;
        t.n_items = 1;
        return std::make_pair(t, std::vector<EvalRecord>{});
    });
    REQUIRE(results.size() == 3);
    REQUIRE_FALSE(results[0].failed);
    REQUIRE(results[1].failed);
    REQUIRE(results[1].error == "cell exploded");
    REQUIRE(results[1].table.flag_counts.at("cell_failed") == 1);
    REQUIRE_FALSE(results[2].failed);
    REQUIRE(results[2].table.mean_accuracy == 42.0);
}

TEST_CASE("run_ablation: empty grid is rejected") {
    auto runner = [](const AblationCell&) {
        return std::make_pair(ResultsTable{}, std::vector<EvalRecord>{});
    };
    REQUIRE_THROWS_AS(run_ablation({}, runner), validation_error);
}

TEST_CASE("sweep_series: sorted by x and skipping failed cells") {
    std::vector<CellResult> cells(3);
    cells[0].cell.hyperparams["num-captions"] = "20";
    cells[0].table.dataset = "okvqa";
    cells[0].table.mean_accuracy = 38.8;
    cells[1].cell.hyperparams["num-captions"] = "5";
    cells[1].table.dataset = "okvqa";
    cells[1].table.mean_accuracy = 35.0;
    cells[2].cell.hyperparams["num-captions"] = "10";
    cells[2].failed = true;
    auto series = sweep_series(cells, "num-captions");
    REQUIRE(series.size() == 2);
    REQUIRE(series[0].x == 5.0);
    REQUIRE(series[1].x == 20.0);
}
