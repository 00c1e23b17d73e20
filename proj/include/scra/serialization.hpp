#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scra/captioning.hpp"
#include "scra/errors.hpp"
#include "scra/evaluation.hpp"
#include "scra/qa_synthesis.hpp"
#include "scra/relevance.hpp"
#include "scra/rerank.hpp"
#include "scra/summarize.hpp"

namespace scra {

// JSON round-trips for everything that crosses a cache or report boundary.

inline void to_json(json& j, const PatchSelection& s) {
    j = json{{"indices", s.indices},
             {"k", s.k},
             {"strategy", to_string(s.strategy)},
             {"seed", s.seed},
             {"uniform_fallback", s.uniform_fallback}};
}

inline void from_json(const json& j, PatchSelection& s) {
    j.at("indices").get_to(s.indices);
    j.at("k").get_to(s.k);
    s.strategy = patch_strategy_from_string(j.at("strategy").get<std::string>());
    j.at("seed").get_to(s.seed);
    j.at("uniform_fallback").get_to(s.uniform_fallback);
}

inline void to_json(json& j, const RelevanceMap& r) {
    std::vector<double> scores(r.scores.data(), r.scores.data() + r.scores.size());
    j = json{{"scores", scores},
             {"rectify_mode", to_string(r.rectify_mode)},
             {"image_id", r.image_id},
             {"question_id", r.question_id}};
}

inline void from_json(const json& j, RelevanceMap& r) {
    std::vector<double> scores = j.at("scores").get<std::vector<double>>();
    r.scores = Eigen::VectorXd(static_cast<Eigen::Index>(scores.size()));
    for (size_t i = 0; i < scores.size(); ++i) r.scores[static_cast<Eigen::Index>(i)] = scores[i];
    r.rectify_mode = rectify_mode_from_string(j.at("rectify_mode").get<std::string>());
    j.at("image_id").get_to(r.image_id);
    j.at("question_id").get_to(r.question_id);
}

inline void to_json(json& j, const Caption& c) {
    j = json{{"text", c.text},
             {"patch_indices", c.patch_indices},
             {"backend_id", c.backend_id},
             {"gen_index", c.gen_index}};
}

inline void from_json(const json& j, Caption& c) {
    j.at("text").get_to(c.text);
    j.at("patch_indices").get_to(c.patch_indices);
    j.at("backend_id").get_to(c.backend_id);
    j.at("gen_index").get_to(c.gen_index);
}

inline void to_json(json& j, const ScoredCaption& s) {
    j = json{{"caption_index", s.caption_index}, {"score", s.score}, {"backend_id", s.backend_id}};
}

inline void from_json(const json& j, ScoredCaption& s) {
    j.at("caption_index").get_to(s.caption_index);
    j.at("score").get_to(s.score);
    j.at("backend_id").get_to(s.backend_id);
}

inline void to_json(json& j, const CaptionSelection& s) {
    j = json{{"ordered", s.ordered}, {"k", s.k}, {"empty_input", s.empty_input}};
}

inline void from_json(const json& j, CaptionSelection& s) {
    j.at("ordered").get_to(s.ordered);
    j.at("k").get_to(s.k);
    j.at("empty_input").get_to(s.empty_input);
}

inline void to_json(json& j, const Summary& s) {
    j = json{{"text", s.text},
             {"target_length", s.target_length},
             {"backend_id", s.backend_id},
             {"source_caption_indices", s.source_caption_indices},
             {"degraded", s.degraded}};
}

inline void from_json(const json& j, Summary& s) {
    j.at("text").get_to(s.text);
    j.at("target_length").get_to(s.target_length);
    j.at("backend_id").get_to(s.backend_id);
    j.at("source_caption_indices").get_to(s.source_caption_indices);
    j.at("degraded").get_to(s.degraded);
}

inline void to_json(json& j, const QAPair& p) {
    j = json{{"question", p.question},
             {"answer", p.answer},
             {"template_id", p.template_id},
             {"source_caption_index", p.source_caption_index},
             {"passed_filter", p.passed_filter}};
}

inline void from_json(const json& j, QAPair& p) {
    j.at("question").get_to(p.question);
    j.at("answer").get_to(p.answer);
    j.at("template_id").get_to(p.template_id);
    j.at("source_caption_index").get_to(p.source_caption_index);
    j.at("passed_filter").get_to(p.passed_filter);
}

inline void to_json(json& j, const AnswerPrediction& p) {
    j = json{{"raw", p.raw},
             {"normalized", p.normalized},
             {"prompt_hash", p.prompt_hash},
             {"backend_id", p.backend_id},
             {"max_new_tokens", p.decode.max_new_tokens},
             {"temperature", p.decode.temperature},
             {"empty_answer", p.empty_answer}};
}

inline void from_json(const json& j, AnswerPrediction& p) {
    j.at("raw").get_to(p.raw);
    j.at("normalized").get_to(p.normalized);
    j.at("prompt_hash").get_to(p.prompt_hash);
    j.at("backend_id").get_to(p.backend_id);
    j.at("max_new_tokens").get_to(p.decode.max_new_tokens);
    j.at("temperature").get_to(p.decode.temperature);
    j.at("empty_answer").get_to(p.empty_answer);
}

inline void to_json(json& j, const EvalRecord& r) {
    j = json{{"question_id", r.question_id},
             {"image_ref", r.image_ref},
             {"question", r.question},
             {"gt_answers", r.gt_answers},
             {"prediction", r.prediction},
             {"prompt", r.prompt},
             {"score", r.score},
             {"flags", r.flags}};
}

inline void from_json(const json& j, EvalRecord& r) {
    j.at("question_id").get_to(r.question_id);
    j.at("image_ref").get_to(r.image_ref);
    j.at("question").get_to(r.question);
    j.at("gt_answers").get_to(r.gt_answers);
    j.at("prediction").get_to(r.prediction);
    j.at("prompt").get_to(r.prompt);
    j.at("score").get_to(r.score);
    r.flags = j.at("flags").get<std::set<std::string>>();
}

inline void to_json(json& j, const ResultsTable& t) {
    j = json{{"config_id", t.config_id},
             {"dataset", t.dataset},
             {"split", t.split},
             {"mean_accuracy", t.mean_accuracy},
             {"mean_accuracy_display", format_accuracy(t.mean_accuracy)},
             {"n_items", t.n_items},
             {"flag_counts", t.flag_counts}};
}

inline void from_json(const json& j, ResultsTable& t) {
    j.at("config_id").get_to(t.config_id);
    j.at("dataset").get_to(t.dataset);
    j.at("split").get_to(t.split);
    j.at("mean_accuracy").get_to(t.mean_accuracy);
    j.at("n_items").get_to(t.n_items);
    t.flag_counts = j.at("flag_counts").get<std::map<std::string, int>>();
}

// Per-item records as line-delimited JSON, the format the score-only command
// reads back.
inline void write_records_jsonl(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write records file: " + path);
    for (const auto& r : records) {
        json j = r;
        out << j.dump() << "\n";
    }
    if (!out) throw io_error("failed writing records file: " + path);
}

inline std::vector<EvalRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read records file: " + path);
    std::vector<EvalRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line).get<EvalRecord>());
        } catch (const json::exception& e) {
            throw ingestion_error("bad record at " + path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
        }
    }
    return records;
}

} // namespace scra
