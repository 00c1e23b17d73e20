#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scra/answer.hpp"
#include "scra/errors.hpp"
#include "scra/prompt.hpp"

namespace scra {

using json = nlohmann::json;

// One dataset item, from loading through scoring.
struct EvalRecord {
    std::string question_id;
    std::string image_ref;
    std::string question;
    std::vector<std::string> gt_answers; // one entry per annotator
    AnswerPrediction prediction;
    std::string prompt; // the exact prompt sent to the model
    double score = 0.0;
    std::set<std::string> flags;
};

struct ResultsTable {
    std::string config_id;
    std::string dataset;
    std::string split;
    double mean_accuracy = 0.0; // percentage, full precision
    int n_items = 0;
    std::map<std::string, int> flag_counts;
};

namespace detail {

inline json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ingestion_error(std::string(what) + " file not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ingestion_error(std::string(what) + " file " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

} // namespace detail

// OK-VQA ships a questions file and an annotations file in the standard VQA
// schema; every question carries the full annotator answer list.
inline std::vector<EvalRecord> load_okvqa(const std::string& question_file,
                                          const std::string& annotation_file) {
    json qj = detail::parse_json_file(question_file, "question");
    json aj = detail::parse_json_file(annotation_file, "annotation");
    if (!qj.contains("questions") || !qj["questions"].is_array())
        throw ingestion_error("question file has no 'questions' array: " + question_file);
    if (!aj.contains("annotations") || !aj["annotations"].is_array())
        throw ingestion_error("annotation file has no 'annotations' array: " + annotation_file);

    std::map<long long, std::vector<std::string>> answers_by_qid;
    for (const auto& ann : aj["annotations"]) {
        if (!ann.contains("question_id"))
            throw ingestion_error("annotation record without question_id");
        const long long qid = ann["question_id"].get<long long>();
        if (!ann.contains("answers") || !ann["answers"].is_array() || ann["answers"].empty())
            throw ingestion_error("question_id " + std::to_string(qid) + ": missing answers");
        std::vector<std::string> answers;
        for (const auto& a : ann["answers"]) {
            if (!a.contains("answer"))
                throw ingestion_error("question_id " + std::to_string(qid) +
                                      ": answer entry without text");
            answers.push_back(a["answer"].get<std::string>());
        }
        answers_by_qid[qid] = std::move(answers);
    }

    std::vector<EvalRecord> records;
    for (const auto& q : qj["questions"]) {
        if (!q.contains("question_id") || !q.contains("question") || !q.contains("image_id"))
            throw ingestion_error("question record missing question_id/question/image_id");
        const long long qid = q["question_id"].get<long long>();
        auto it = answers_by_qid.find(qid);
        if (it == answers_by_qid.end())
            throw ingestion_error("question_id " + std::to_string(qid) + ": no annotation record");
        EvalRecord rec;
        rec.question_id = std::to_string(qid);
        rec.image_ref = std::to_string(q["image_id"].get<long long>());
        rec.question = q["question"].get<std::string>();
        rec.gt_answers = it->second;
        records.push_back(std::move(rec));
    }
    return records;
}

// A-OKVQA is a single JSON array per split; scoring uses the direct-answer
// list. Records carrying an explicit split field are filtered against the
// requested one.
inline std::vector<EvalRecord> load_aokvqa(const std::string& annotation_file,
                                           const std::string& split) {
    json j = detail::parse_json_file(annotation_file, "annotation");
    if (!j.is_array())
        throw ingestion_error("expected a JSON array of records: " + annotation_file);
    std::vector<EvalRecord> records;
    for (const auto& item : j) {
        if (!item.contains("question_id"))
            throw ingestion_error("record without question_id in " + annotation_file);
        std::string qid = item["question_id"].is_string()
                              ? item["question_id"].get<std::string>()
                              : std::to_string(item["question_id"].get<long long>());
        if (item.contains("split") && item["split"].get<std::string>() != split) continue;
        if (!item.contains("question"))
            throw ingestion_error("question_id " + qid + ": missing question");
        if (!item.contains("direct_answers") || !item["direct_answers"].is_array() ||
            item["direct_answers"].empty())
            throw ingestion_error("question_id " + qid + ": missing direct answers");
        EvalRecord rec;
        rec.question_id = qid;
        rec.image_ref = item.contains("image_id")
                            ? (item["image_id"].is_string()
                                   ? item["image_id"].get<std::string>()
                                   : std::to_string(item["image_id"].get<long long>()))
                            : qid;
        rec.question = item["question"].get<std::string>();
        for (const auto& a : item["direct_answers"]) rec.gt_answers.push_back(a.get<std::string>());
        records.push_back(std::move(rec));
    }
    return records;
}

// Soft accuracy: min(matches / 3, 1) where matches counts annotator answers
// whose normalized form equals the (already normalized) prediction.
inline double vqa_soft_accuracy(const std::string& normalized_prediction,
                                const std::vector<std::string>& gt_answers) {
    if (gt_answers.empty()) throw validation_error("ground-truth answer list is empty");
    int matches = 0;
    for (const auto& gt : gt_answers)
        if (normalize_answer(gt) == normalized_prediction) ++matches;
    return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

// Mean of the per-item scores as a percentage, kept at full precision;
// display rounding happens in the report layer.
inline ResultsTable aggregate(const std::vector<EvalRecord>& records,
                              const std::string& config_id = "", const std::string& dataset = "",
                              const std::string& split = "") {
    if (records.empty()) throw aggregation_error("no records to aggregate");
    ResultsTable table;
    table.config_id = config_id;
    table.dataset = dataset;
    table.split = split;
    table.n_items = static_cast<int>(records.size());
    double sum = 0.0;
    for (const auto& r : records) {
        sum += r.score;
        for (const auto& f : r.flags) ++table.flag_counts[f];
    }
    table.mean_accuracy = 100.0 * sum / static_cast<double>(records.size());
    return table;
}

// One decimal, matching how the tables are printed.
inline std::string format_accuracy(double mean_accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", mean_accuracy);
    return buf;
}

// One grid cell of an ablation or sweep run.
struct AblationCell {
    PromptFormat format = PromptFormat::MC_S_MQA;
    PromptContent content = PromptContent::I_RC_S_QAP;
    std::map<std::string, std::string> hyperparams; // e.g. num_captions=10
    std::string label;
};

struct CellResult {
    AblationCell cell;
    ResultsTable table;
    std::vector<EvalRecord> records;
    bool failed = false;
    std::string error;
};

// Runs every cell through `run_cell`, isolating failures: a crashing cell is
// flagged and the rest of the grid still completes.
template <typename Runner>
std::vector<CellResult> run_ablation(const std::vector<AblationCell>& grid, Runner&& run_cell) {
    if (grid.empty()) throw validation_error("ablation grid is empty");
    std::vector<CellResult> results;
    results.reserve(grid.size());
    for (const auto& cell : grid) {
        CellResult out;
        out.cell = cell;
        try {
            std::tie(out.table, out.records) = run_cell(cell);
            out.table.config_id = cell.label.empty() ? out.table.config_id : cell.label;
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
            out.table.config_id = cell.label;
            out.table.flag_counts["cell_failed"] = 1;
        }
        results.push_back(std::move(out));
    }
    return results;
}

// (x, accuracy) series for the hyperparameter sweeps, one point per cell.
struct SweepPoint {
    double x = 0.0;
    std::string dataset;
    double accuracy = 0.0;
};

inline std::vector<SweepPoint> sweep_series(const std::vector<CellResult>& cells,
                                            const std::string& param) {
    std::vector<SweepPoint> series;
    for (const auto& c : cells) {
        auto it = c.cell.hyperparams.find(param);
        if (it == c.cell.hyperparams.end() || c.failed) continue;
        series.push_back({std::stod(it->second), c.table.dataset, c.table.mean_accuracy});
    }
    std::stable_sort(series.begin(), series.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.x < b.x; });
    return series;
}

} // namespace scra
