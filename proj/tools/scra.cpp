// Command-line front end for the caption-rerank VQA pipeline: batch runs,
// prompt ablations, hyperparameter sweeps, offline rescoring and per-item
// inspection, all against pluggable (by default deterministic stub) backends.

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "scra/pipeline.hpp"
#include "scra/report.hpp"
#include "scra/scra.hpp"

using namespace scra;

namespace {

// Registers every PipelineConfig flag on a subcommand. Values are applied in
// precedence order: built-in defaults, then the config file, then explicit
// flags.
struct ConfigFlags {
    std::string config_file;
    std::vector<std::pair<std::string, CLI::Option*>> tracked;
    CLI::Option* strict_flag = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key = value config file");
        auto track = [&](const char* key, const char* desc) {
            tracked.emplace_back(key, cmd->add_option(std::string("--") + key)->description(desc));
        };
        track("dataset", "okvqa | aokvqa");
        track("split", "dataset split (default: test for okvqa, val for aokvqa)");
        track("questions", "OK-VQA questions JSON");
        track("annotations", "annotations JSON");
        track("images-dir", "image directory handed to real backends");
        track("captioner", "captioning backend id (default stub)");
        track("captioner-checkpoint", "captioner checkpoint string");
        track("reranker", "reranker backend id (default stub)");
        track("reranker-checkpoint", "reranker checkpoint string");
        track("llm", "completion backend id (default stub)");
        track("llm-checkpoint", "LLM checkpoint string");
        track("parser", "POS parser backend id (default rules)");
        track("qa-answerer", "consistency filter backend: auto | stub | completer");
        track("num-captions", "captions generated per item (0 = dataset default)");
        track("top-k-patches", "patches sampled per image (default 20)");
        track("rerank-keep", "captions kept after reranking (default 5)");
        track("summary-length", "summary token budget (0 = dataset default)");
        track("qa-pair-cap", "max QA pairs per item before filtering (default 30)");
        track("max-new-tokens", "answer decode budget (default 10)");
        track("prompt-format", "S+C+QA | C+QA+S | MC+MQA+S | S+MC+MQA | MC+S+MQA");
        track("prompt-content", "I | I+C | I+C+QAP | I+S+QAP | I+C+S+QAP | I+RC+S+QAP");
        track("rectify-mode", "gradient rectification: positive | negative");
        track("patch-strategy", "deterministic_topk | weighted_sample");
        track("seed", "run seed");
        track("max-items", "limit items processed (0 = all)");
        track("workers", "worker threads, clamped to backend capabilities");
        track("templates", "question template registry file");
        track("adj-lexicon", "adjective type lexicon file");
        track("prompt-assets", "prompt label/instruction asset file");
        tracked.emplace_back("cache-dir", cmd->add_option("--cache-dir")
                                              ->description("stage cache directory")
                                              ->envname("SCRA_CACHE_DIR"));
        strict_flag = cmd->add_flag("--strict", "abort the run on the first item failure");
    }

    PipelineConfig build() const {
        PipelineConfig cfg;
        if (!config_file.empty()) apply_config_file(cfg, config_file);
        for (const auto& [key, opt] : tracked)
            if (opt->count() > 0) apply_config_value(cfg, key, opt->results().back());
        if (strict_flag->count() > 0) cfg.strict = true;
        return cfg;
    }
};

void print_table(const ResultsTable& t) {
    std::printf("%-24s %-8s %-6s n=%-6d accuracy=%s%%\n", t.config_id.c_str(), t.dataset.c_str(),
                t.split.c_str(), t.n_items, format_accuracy(t.mean_accuracy).c_str());
}

int cmd_run(const ConfigFlags& flags, const std::string& out_dir) {
    Pipeline pipeline(flags.build());
    RunOutput out = pipeline.run();
    emit_report({out.table}, out.records, out_dir);
    print_table(out.table);
    std::printf("wrote %s/results.csv, results.json, records.jsonl\n", out_dir.c_str());
    return 0;
}

int cmd_ablate(const ConfigFlags& flags, const std::string& axis, const std::string& out_dir) {
    PipelineConfig cfg = flags.build();
    std::vector<AblationCell> grid;
    if (axis == "content" || axis == "both") {
        auto g = content_ablation_grid(prompt_format_from_string(cfg.prompt_format));
        grid.insert(grid.end(), g.begin(), g.end());
    }
    if (axis == "format" || axis == "both") {
        auto g = format_ablation_grid(prompt_content_from_string(cfg.prompt_content));
        grid.insert(grid.end(), g.begin(), g.end());
    }
    if (grid.empty()) throw config_error("--axis must be content, format or both");

    auto cells = run_grid(cfg, grid);
    std::vector<ResultsTable> tables;
    for (const auto& cell : cells) {
        tables.push_back(cell.table);
        if (cell.failed) std::printf("%-24s FAILED: %s\n", cell.cell.label.c_str(), cell.error.c_str());
        else print_table(cell.table);
    }
    emit_report(tables, {}, out_dir);
    std::printf("wrote %s/results.csv, results.json\n", out_dir.c_str());
    return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& param, std::vector<int> values,
              const std::string& out_dir) {
    if (param != "num-captions" && param != "summary-length")
        throw config_error("--param must be num-captions or summary-length");
    if (values.empty())
        values = param == "num-captions" ? std::vector<int>{5, 10, 20, 30}
                                         : std::vector<int>{60, 100, 140, 160};
    PipelineConfig cfg = flags.build();
    auto cells = run_grid(cfg, sweep_grid(param, values,
                                          prompt_format_from_string(cfg.prompt_format),
                                          prompt_content_from_string(cfg.prompt_content)));
    std::vector<ResultsTable> tables;
    for (const auto& cell : cells) {
        tables.push_back(cell.table);
        if (cell.failed) std::printf("%-24s FAILED: %s\n", cell.cell.label.c_str(), cell.error.c_str());
        else print_table(cell.table);
    }
    emit_report(tables, {}, out_dir);
    emit_sweep_series(sweep_series(cells, param), param, out_dir);
    std::printf("wrote %s/results.csv, results.json, sweep_%s.csv\n", out_dir.c_str(),
                param.c_str());
    return 0;
}

// Rescoring from a predictions file: full records.jsonl lines or minimal
// {"question_id": ..., "answer": ...} objects.
int cmd_score_only(const ConfigFlags& flags, const std::string& predictions_file,
                   const std::string& out_dir) {
    PipelineConfig cfg = flags.build();
    finalize_config(cfg);
    std::vector<EvalRecord> dataset = cfg.dataset == "okvqa"
                                          ? load_okvqa(cfg.questions_file, cfg.annotations_file)
                                          : load_aokvqa(cfg.annotations_file, cfg.split);
    if (cfg.max_items > 0 && static_cast<int>(dataset.size()) > cfg.max_items)
        dataset.resize(static_cast<size_t>(cfg.max_items));

    std::ifstream in(predictions_file);
    if (!in) throw ingestion_error("cannot read predictions file: " + predictions_file);
    std::map<std::string, std::string> normalized_by_qid;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ingestion_error(predictions_file + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("question_id"))
            throw ingestion_error(predictions_file + ":" + std::to_string(lineno) +
                                  ": missing question_id");
        const std::string qid = j["question_id"].is_string()
                                    ? j["question_id"].get<std::string>()
                                    : std::to_string(j["question_id"].get<long long>());
        std::string answer;
        if (j.contains("prediction")) answer = j["prediction"].value("normalized", "");
        else if (j.contains("answer")) answer = normalize_answer(j["answer"].get<std::string>());
        else
            throw ingestion_error(predictions_file + ":" + std::to_string(lineno) +
                                  ": needs 'answer' or 'prediction'");
        normalized_by_qid[qid] = answer;
    }

    int missing = 0;
    for (auto& rec : dataset) {
        auto it = normalized_by_qid.find(rec.question_id);
        if (it == normalized_by_qid.end()) {
            rec.flags.insert("no-prediction");
            ++missing;
            continue;
        }
        rec.prediction.normalized = it->second;
        rec.score = vqa_soft_accuracy(it->second, rec.gt_answers);
    }
    ResultsTable table = aggregate(dataset, "score-only", cfg.dataset, cfg.split);
    emit_report({table}, dataset, out_dir);
    print_table(table);
    if (missing > 0) std::printf("%d item(s) had no prediction and scored 0\n", missing);
    return 0;
}

int cmd_inspect(const ConfigFlags& flags, const std::string& question_id) {
    Pipeline pipeline(flags.build());
    std::fputs(pipeline.inspect(question_id).c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SCRA-VQA: summarized caption-rerank pipeline for zero-shot VQA"};
    app.require_subcommand(1);

    ConfigFlags run_flags, ablate_flags, sweep_flags, score_flags, inspect_flags;
    std::string run_out = "out", ablate_out = "out", sweep_out = "out", score_out = "out";
    std::string axis = "content";
    std::string sweep_param = "num-captions";
    std::vector<int> sweep_values;
    std::string predictions_file;
    std::string question_id;

    CLI::App* run = app.add_subcommand("run", "run the pipeline over a dataset split");
    run_flags.attach(run);
    run->add_option("--out", run_out, "output directory");

    CLI::App* ablate = app.add_subcommand("ablate", "prompt content / format ablation grid");
    ablate_flags.attach(ablate);
    ablate->add_option("--axis", axis, "content | format | both");
    ablate->add_option("--out", ablate_out, "output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweep with series output");
    sweep_flags.attach(sweep);
    sweep->add_option("--param", sweep_param, "num-captions | summary-length");
    sweep->add_option("--values", sweep_values, "swept values (comma separated)")->delimiter(',');
    sweep->add_option("--out", sweep_out, "output directory");

    CLI::App* score = app.add_subcommand("score-only", "rescore an existing predictions file");
    score_flags.attach(score);
    score->add_option("--predictions", predictions_file, "records.jsonl or {question_id, answer} lines")
        ->required();
    score->add_option("--out", score_out, "output directory");

    CLI::App* inspect = app.add_subcommand("inspect", "dump every stage artifact for one item");
    inspect_flags.attach(inspect);
    inspect->add_option("question_id", question_id, "question id to trace")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags, run_out);
        if (ablate->parsed()) return cmd_ablate(ablate_flags, axis, ablate_out);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_param, sweep_values, sweep_out);
        if (score->parsed()) return cmd_score_only(score_flags, predictions_file, score_out);
        if (inspect->parsed()) return cmd_inspect(inspect_flags, question_id);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ingestion_error& e) {
        std::fprintf(stderr, "ingestion error: %s\n", e.what());
        return 3;
    } catch (const backend_error& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
