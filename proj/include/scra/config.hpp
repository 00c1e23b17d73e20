#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "scra/errors.hpp"
#include "scra/hash.hpp"
#include "scra/prompt.hpp"
#include "scra/relevance.hpp"
#include "scra/text.hpp"

namespace scra {

// Everything a pipeline run depends on. Counts left at 0 resolve to
// per-dataset defaults in finalize().
struct PipelineConfig {
    std::string dataset;    // "okvqa" | "aokvqa"
    std::string split;      // "test" for OK-VQA, "val" for A-OKVQA
    std::string questions_file;
    std::string annotations_file;
    std::string images_dir; // handed to real backends, unused by stubs

    std::string captioner = "stub";
    std::string captioner_checkpoint;
    std::string reranker = "stub";
    std::string reranker_checkpoint;
    std::string llm = "stub";
    std::string llm_checkpoint;
    std::string parser = "rules";
    std::string qa_answerer = "auto"; // auto | stub | completer

    int num_captions = 0;   // 0 = dataset default (okvqa 20, aokvqa 5, else patches+1)
    int top_k_patches = 20;
    int rerank_keep = 5;
    int summary_length = 0; // 0 = dataset default (aokvqa 100, okvqa 140)
    int qa_pair_cap = 30;
    int max_new_tokens = 10;

    std::string prompt_format = "MC+S+MQA";
    std::string prompt_content = "I+RC+S+QAP";
    std::string rectify_mode = "positive";
    std::string patch_strategy = "deterministic_topk";

    uint64_t seed = 0;
    std::string cache_dir;
    int max_items = 0; // 0 = all
    int workers = 1;
    bool strict = false;

    std::string template_file;     // optional Table-1 registry override
    std::string adj_lexicon_file;  // optional adjective-type lexicon override
    std::string prompt_asset_file; // optional instruction/label override

    int effective_num_captions() const {
        if (num_captions > 0) return num_captions;
        if (dataset == "okvqa") return 20;
        if (dataset == "aokvqa") return 5;
        return top_k_patches + 1;
    }

    int effective_summary_length() const {
        if (summary_length > 0) return summary_length;
        if (dataset == "okvqa") return 140;
        return 100;
    }
};

namespace config_detail {

inline int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "' wants an integer, got '" + value + "'");
    }
}

inline uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "' wants an unsigned integer, got '" + value +
                           "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    std::string v = to_lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config key '" + key + "' wants a boolean, got '" + value + "'");
}

} // namespace config_detail

// Applies one key=value setting; keys match the CLI flag names.
inline void apply_config_value(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
    using namespace config_detail;
    if (key == "dataset") cfg.dataset = value;
    else if (key == "split") cfg.split = value;
    else if (key == "questions") cfg.questions_file = value;
    else if (key == "annotations") cfg.annotations_file = value;
    else if (key == "images-dir") cfg.images_dir = value;
    else if (key == "captioner") cfg.captioner = value;
    else if (key == "captioner-checkpoint") cfg.captioner_checkpoint = value;
    else if (key == "reranker") cfg.reranker = value;
    else if (key == "reranker-checkpoint") cfg.reranker_checkpoint = value;
    else if (key == "llm") cfg.llm = value;
    else if (key == "llm-checkpoint") cfg.llm_checkpoint = value;
    else if (key == "parser") cfg.parser = value;
    else if (key == "qa-answerer") cfg.qa_answerer = value;
    else if (key == "num-captions") cfg.num_captions = parse_int(key, value);
    else if (key == "top-k-patches") cfg.top_k_patches = parse_int(key, value);
    else if (key == "rerank-keep") cfg.rerank_keep = parse_int(key, value);
    else if (key == "summary-length") cfg.summary_length = parse_int(key, value);
    else if (key == "qa-pair-cap") cfg.qa_pair_cap = parse_int(key, value);
    else if (key == "max-new-tokens") cfg.max_new_tokens = parse_int(key, value);
    else if (key == "prompt-format") cfg.prompt_format = value;
    else if (key == "prompt-content") cfg.prompt_content = value;
    else if (key == "rectify-mode") cfg.rectify_mode = value;
    else if (key == "patch-strategy") cfg.patch_strategy = value;
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "cache-dir") cfg.cache_dir = value;
    else if (key == "max-items") cfg.max_items = parse_int(key, value);
    else if (key == "workers") cfg.workers = parse_int(key, value);
    else if (key == "strict") cfg.strict = parse_bool(key, value);
    else if (key == "templates") cfg.template_file = value;
    else if (key == "adj-lexicon") cfg.adj_lexicon_file = value;
    else if (key == "prompt-assets") cfg.prompt_asset_file = value;
    else throw config_error("unknown config key: " + key);
}

// key = value lines, '#' comments. Used by the CLI before flag overrides.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got: " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    for (const auto& [key, value] : load_config_file(path)) apply_config_value(cfg, key, value);
}

// Validates the config and resolves environment defaults. Throws
// config_error on anything a run cannot proceed with.
inline void finalize_config(PipelineConfig& cfg) {
    if (cfg.dataset != "okvqa" && cfg.dataset != "aokvqa")
        throw config_error("dataset must be 'okvqa' or 'aokvqa', got '" + cfg.dataset + "'");
    if (cfg.split.empty()) cfg.split = cfg.dataset == "okvqa" ? "test" : "val";
    if (cfg.dataset == "okvqa" && cfg.questions_file.empty())
        throw config_error("okvqa needs a questions file");
    if (cfg.annotations_file.empty()) throw config_error("annotations file is required");
    if (cfg.num_captions < 0 || cfg.top_k_patches < 1 || cfg.rerank_keep < 1 ||
        cfg.qa_pair_cap < 1 || cfg.max_new_tokens < 1 || cfg.workers < 1)
        throw config_error("counts must be >= 1");
    if (cfg.summary_length != 0 && cfg.summary_length < 16)
        throw config_error("summary-length must be >= 16");
    try {
        prompt_format_from_string(cfg.prompt_format);
        prompt_content_from_string(cfg.prompt_content);
        rectify_mode_from_string(cfg.rectify_mode);
        patch_strategy_from_string(cfg.patch_strategy);
    } catch (const validation_error& e) {
        throw config_error(e.what());
    }
    if (cfg.cache_dir.empty()) {
        if (const char* env = std::getenv("SCRA_CACHE_DIR")) cfg.cache_dir = env;
    }
}

namespace config_detail {

// Canonical field list; the hash sorts by key, so declaration order and
// file/flag order never change the digest.
inline std::map<std::string, std::string> config_fields(const PipelineConfig& c) {
    return {
        {"dataset", c.dataset},
        {"split", c.split},
        {"captioner", c.captioner + "@" + c.captioner_checkpoint},
        {"reranker", c.reranker + "@" + c.reranker_checkpoint},
        {"llm", c.llm + "@" + c.llm_checkpoint},
        {"parser", c.parser},
        {"qa_answerer", c.qa_answerer},
        {"num_captions", std::to_string(c.effective_num_captions())},
        {"top_k_patches", std::to_string(c.top_k_patches)},
        {"rerank_keep", std::to_string(c.rerank_keep)},
        {"summary_length", std::to_string(c.effective_summary_length())},
        {"qa_pair_cap", std::to_string(c.qa_pair_cap)},
        {"max_new_tokens", std::to_string(c.max_new_tokens)},
        {"prompt_format", c.prompt_format},
        {"prompt_content", c.prompt_content},
        {"rectify_mode", c.rectify_mode},
        {"patch_strategy", c.patch_strategy},
        {"seed", std::to_string(c.seed)},
    };
}

inline std::string hash_fields(const std::map<std::string, std::string>& fields) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& [k, v] : fields) { // std::map iterates sorted
        h = fnv1a64(k, h);
        h = fnv1a64("=", h);
        h = fnv1a64(v, h);
        h = fnv1a64("\n", h);
    }
    return hex_digest(h);
}

} // namespace config_detail

// Digest of every behavior-relevant field.
inline std::string config_hash(const PipelineConfig& cfg) {
    return config_detail::hash_fields(config_detail::config_fields(cfg));
}

// Cache sub-hash for one stage: only the fields that can change that stage's
// output enter the digest, so e.g. switching the prompt format leaves every
// caption and rerank cache entry valid.
inline std::string stage_subhash(const PipelineConfig& cfg, const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> kStageFields = {
        {"patches",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed"}},
        {"captions",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed", "num_captions"}},
        {"rerank",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed", "num_captions", "reranker", "rerank_keep"}},
        {"summary",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed", "num_captions", "reranker", "rerank_keep", "llm", "summary_length"}},
        {"qa",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed", "num_captions", "reranker", "rerank_keep", "llm", "parser", "qa_answerer",
          "qa_pair_cap"}},
        {"answer",
         {"dataset", "split", "captioner", "rectify_mode", "patch_strategy", "top_k_patches",
          "seed", "num_captions", "reranker", "rerank_keep", "llm", "parser", "qa_answerer",
          "qa_pair_cap", "summary_length", "prompt_format", "prompt_content", "max_new_tokens"}},
    };
    auto it = kStageFields.find(stage);
    if (it == kStageFields.end()) throw validation_error("unknown cache stage: " + stage);
    const auto all = config_detail::config_fields(cfg);
    std::map<std::string, std::string> subset;
    for (const auto& field : it->second) subset[field] = all.at(field);
    return config_detail::hash_fields(subset);
}

} // namespace scra
