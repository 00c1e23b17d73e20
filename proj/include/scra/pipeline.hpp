#pragma once

#include <atomic>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scra/answer.hpp"
#include "scra/cache.hpp"
#include "scra/captioning.hpp"
#include "scra/completion.hpp"
#include "scra/config.hpp"
#include "scra/errors.hpp"
#include "scra/evaluation.hpp"
#include "scra/prompt.hpp"
#include "scra/qa_synthesis.hpp"
#include "scra/relevance.hpp"
#include "scra/rerank.hpp"
#include "scra/serialization.hpp"
#include "scra/stub_backends.hpp"
#include "scra/summarize.hpp"

namespace scra {

struct Backends {
    std::shared_ptr<CaptionerBackend> captioner;
    std::shared_ptr<RerankerBackend> reranker;
    std::shared_ptr<TextCompleter> llm;
    std::shared_ptr<PosParserBackend> parser;
    std::shared_ptr<QaAnswerer> qa;

    // Total model invocations across the deterministic stubs; real backends
    // do not report.
    long stub_calls() const {
        long n = 0;
        if (auto* c = dynamic_cast<StubCaptioner*>(captioner.get())) n += c->calls();
        if (auto* c = dynamic_cast<ScriptedCaptioner*>(captioner.get())) n += c->calls();
        if (auto* r = dynamic_cast<StubReranker*>(reranker.get())) n += r->calls();
        if (auto* l = dynamic_cast<StubCompleter*>(llm.get())) n += l->calls();
        if (auto* q = dynamic_cast<StubQaAnswerer*>(qa.get())) n += q->calls();
        return n;
    }
};

// Builds the backend set named by the config. Model checkpoints are plain
// config strings; anything other than the in-repo ids needs an adapter
// implementing the backend interface.
inline Backends make_backends(const PipelineConfig& cfg) {
    Backends b;
    if (cfg.captioner == "stub") b.captioner = std::make_shared<StubCaptioner>();
    else throw config_error("unknown captioner backend: " + cfg.captioner);
    if (cfg.reranker == "stub") b.reranker = std::make_shared<StubReranker>();
    else throw config_error("unknown reranker backend: " + cfg.reranker);
    if (cfg.llm == "stub") b.llm = std::make_shared<StubCompleter>();
    else throw config_error("unknown llm backend: " + cfg.llm);

    AdjTypeLexicon lexicon = cfg.adj_lexicon_file.empty()
                                 ? AdjTypeLexicon::builtin()
                                 : AdjTypeLexicon::load(cfg.adj_lexicon_file);
    if (cfg.parser == "rules") b.parser = std::make_shared<RuleBasedPosParser>(std::move(lexicon));
    else throw config_error("unknown parser backend: " + cfg.parser);

    TemplateRegistry registry = cfg.template_file.empty() ? TemplateRegistry::builtin()
                                                          : TemplateRegistry::load(cfg.template_file);
    const bool use_stub_answerer =
        cfg.qa_answerer == "stub" || (cfg.qa_answerer == "auto" && cfg.llm == "stub");
    if (use_stub_answerer) {
        b.qa = std::make_shared<StubQaAnswerer>(std::move(registry));
    } else if (cfg.qa_answerer == "completer" || cfg.qa_answerer == "auto") {
        b.qa = std::make_shared<CompleterQaAnswerer>(*b.llm);
    } else {
        throw config_error("unknown qa-answerer: " + cfg.qa_answerer);
    }
    return b;
}

struct RunOutput {
    ResultsTable table;
    std::vector<EvalRecord> records;
};

// Stage artifacts for one item, what `inspect` prints.
struct ItemTrace {
    RelevanceMap relevance;
    PatchSelection selection;
    bool no_attention = false;
    std::vector<Caption> captions;
    bool whole_image_fallback = false;
    std::vector<ScoredCaption> scored;
    CaptionSelection rerank;
    Summary summary;
    std::vector<QAPair> qa_pairs;
    bool qa_degraded = false;
    std::string prompt;
    AnswerPrediction prediction;
};

// End-to-end orchestration: relevance -> patch sampling -> captions -> dedup
// -> rerank -> summary -> QA synthesis and filtering -> prompt -> answer ->
// score, every stage backed by the keyed cache.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg) : Pipeline(std::move(cfg), {}) {}

    Pipeline(PipelineConfig cfg, Backends backends) : cfg_(std::move(cfg)) {
        finalize_config(cfg_);
        backends_ = backends.captioner ? std::move(backends) : make_backends(cfg_);
        registry_ = cfg_.template_file.empty() ? TemplateRegistry::builtin()
                                               : TemplateRegistry::load(cfg_.template_file);
        assets_ = cfg_.prompt_asset_file.empty() ? PromptAssets::builtin()
                                                 : PromptAssets::load(cfg_.prompt_asset_file);
        format_ = prompt_format_from_string(cfg_.prompt_format);
        content_ = prompt_content_from_string(cfg_.prompt_content);
        rectify_ = rectify_mode_from_string(cfg_.rectify_mode);
        strategy_ = patch_strategy_from_string(cfg_.patch_strategy);
        if (!cfg_.cache_dir.empty()) cache_.open(cfg_.cache_dir);
    }

    const PipelineConfig& config() const { return cfg_; }
    const Backends& backends() const { return backends_; }
    StageCache& cache() { return cache_; }

    std::vector<EvalRecord> load_dataset() const {
        std::vector<EvalRecord> records =
            cfg_.dataset == "okvqa"
                ? load_okvqa(cfg_.questions_file, cfg_.annotations_file)
                : load_aokvqa(cfg_.annotations_file, cfg_.split);
        if (cfg_.max_items > 0 && static_cast<int>(records.size()) > cfg_.max_items)
            records.resize(static_cast<size_t>(cfg_.max_items));
        return records;
    }

    RunOutput run() {
        std::vector<EvalRecord> records = load_dataset();
        const int workers = effective_workers();
        if (workers <= 1 || records.size() < 2) {
            for (auto& rec : records) process_item(rec);
        } else {
            std::atomic<size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(static_cast<size_t>(workers));
            std::atomic<bool> abort{false};
            std::exception_ptr first_error;
            std::mutex error_mutex;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    while (!abort.load()) {
                        const size_t i = next.fetch_add(1);
                        if (i >= records.size()) return;
                        try {
                            process_item(records[i]);
                        } catch (...) {
                            std::lock_guard<std::mutex> lock(error_mutex);
                            if (!first_error) first_error = std::current_exception();
                            abort.store(true);
                            return;
                        }
                    }
                });
            }
            for (auto& t : pool) t.join();
            if (first_error) std::rethrow_exception(first_error);
        }

        RunOutput out;
        out.records = std::move(records);
        out.table = aggregate(out.records, config_hash(cfg_).substr(0, 12), cfg_.dataset, cfg_.split);
        return out;
    }

    // Runs one record through every stage. Failures score 0 and are flagged
    // unless strict mode is on.
    void process_item(EvalRecord& rec) {
        try {
            ItemTrace trace = trace_item(rec);
            rec.prompt = trace.prompt;
            rec.prediction = trace.prediction;
            if (trace.no_attention) rec.flags.insert("no-attention-export");
            if (trace.selection.uniform_fallback) rec.flags.insert("patch-uniform-fallback");
            if (trace.whole_image_fallback) rec.flags.insert("whole-image-fallback");
            if (trace.summary.degraded) rec.flags.insert("summary-degraded");
            if (trace.qa_degraded) rec.flags.insert("qa-filter-degraded");
            if (trace.prediction.empty_answer) rec.flags.insert("empty-answer");
            rec.score = vqa_soft_accuracy(rec.prediction.normalized, rec.gt_answers);
        } catch (const std::exception& e) {
            if (cfg_.strict) throw;
            rec.score = 0.0;
            rec.flags.insert("failed");
            rec.flags.insert(std::string("error:") + e.what());
        }
    }

    // Full per-stage artifacts for one item, through the cache like run().
    ItemTrace trace_item(const EvalRecord& rec) {
        ItemTrace trace;
        const uint64_t item_seed = hash_mix(cfg_.seed, fnv1a64(rec.question_id));

        stage_patches(rec, item_seed, trace);
        stage_captions(rec, item_seed, trace);
        stage_rerank(rec, trace);
        stage_summary(rec, item_seed, trace);
        stage_qa(rec, trace);
        stage_answer(rec, trace);
        return trace;
    }

    std::string inspect(const std::string& question_id) {
        std::vector<EvalRecord> records = load_dataset();
        const EvalRecord* found = nullptr;
        for (const auto& r : records)
            if (r.question_id == question_id) {
                found = &r;
                break;
            }
        if (!found) throw ingestion_error("question_id not found in dataset: " + question_id);

        ItemTrace trace = trace_item(*found);
        const double score = vqa_soft_accuracy(trace.prediction.normalized, found->gt_answers);

        std::ostringstream out;
        out << "question_id: " << found->question_id << "\n";
        out << "image_ref: " << found->image_ref << "\n";
        out << "question: " << found->question << "\n";
        out << "gt_answers: " << join(found->gt_answers, " | ") << "\n";
        out << "\n[patches] strategy=" << to_string(trace.selection.strategy)
            << " k=" << trace.selection.k
            << " rectify=" << to_string(trace.relevance.rectify_mode)
            << (trace.selection.uniform_fallback ? " uniform-fallback" : "") << "\n  ";
        for (size_t i = 0; i < trace.selection.indices.size(); ++i)
            out << (i ? "," : "") << trace.selection.indices[i];
        if (trace.relevance.scores.size() > 0) {
            out << "\n  top relevance:";
            const size_t show = std::min<size_t>(5, trace.selection.indices.size());
            for (size_t i = 0; i < show; ++i) {
                const int idx = trace.selection.indices[i];
                out << " " << idx << "=" << trace.relevance.scores[idx];
            }
        }
        out << "\n\n[captions]" << (trace.whole_image_fallback ? " (whole-image fallback)" : "")
            << "\n";
        for (size_t i = 0; i < trace.captions.size(); ++i)
            out << "  " << i << ": " << trace.captions[i].text << "\n";
        out << "\n[rerank] keep=" << trace.rerank.k << "\n";
        for (int idx : trace.rerank.ordered) {
            double s = 0.0;
            for (const auto& sc : trace.scored)
                if (sc.caption_index == idx) s = sc.score;
            out << "  " << idx << " score=" << s << ": " << trace.captions[static_cast<size_t>(idx)].text
                << "\n";
        }
        out << "\n[summary]" << (trace.summary.degraded ? " (degraded fallback)" : "") << "\n  "
            << trace.summary.text << "\n";
        out << "\n[qa_pairs]" << (trace.qa_degraded ? " (filter degraded)" : "") << "\n";
        for (const auto& p : trace.qa_pairs)
            out << "  [" << p.template_id << " cap=" << p.source_caption_index << "] " << p.question
                << " -> " << p.answer << "\n";
        out << "\n[prompt]\n" << trace.prompt << "\n";
        out << "\n[answer] raw=\"" << trace.prediction.raw << "\" normalized=\""
            << trace.prediction.normalized << "\"\n";
        out << "[score] " << score << "\n";
        return out.str();
    }

    long stub_backend_calls() const { return backends_.stub_calls(); }

private:
    int effective_workers() const {
        int cap = cfg_.workers;
        cap = std::min(cap, backends_.captioner->capabilities().max_concurrency);
        cap = std::min(cap, backends_.reranker->max_concurrency());
        cap = std::min(cap, backends_.llm->max_concurrency());
        return std::max(1, cap);
    }

    CacheKey key_for(const EvalRecord& rec, const std::string& stage) const {
        return {rec.question_id, stage, stage_subhash(cfg_, stage)};
    }

    template <typename Fn>
    auto with_retry(Fn&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const backend_error& e) {
            if (!e.retriable()) throw;
            return fn();
        }
    }

    void stage_patches(const EvalRecord& rec, uint64_t item_seed, ItemTrace& trace) {
        const CacheKey key = key_for(rec, "patches");
        if (auto hit = cache_.get(key)) {
            trace.relevance = hit->at("relevance").get<RelevanceMap>();
            trace.selection = hit->at("selection").get<PatchSelection>();
            trace.no_attention = hit->value("no_attention", false);
            return;
        }
        trace.relevance.rectify_mode = rectify_;
        trace.relevance.image_id = rec.image_ref;
        trace.relevance.question_id = rec.question_id;
        if (!backends_.captioner->capabilities().supports_attention_export) {
            trace.no_attention = true;
            trace.relevance.scores = Eigen::VectorXd();
            trace.selection.k = cfg_.top_k_patches;
            trace.selection.strategy = strategy_;
            trace.selection.seed = item_seed;
        } else {
            AttentionTensor attn = with_retry([&] {
                return backends_.captioner->export_attention(rec.image_ref, rec.question);
            });
            RelevanceMap rel = patch_relevance(attn, rectify_);
            rel.image_id = rec.image_ref;
            rel.question_id = rec.question_id;
            trace.relevance = rel;
            trace.selection = sample_patches(rel, cfg_.top_k_patches, strategy_, item_seed);
        }
        cache_.put(key, {{"relevance", trace.relevance},
                         {"selection", trace.selection},
                         {"no_attention", trace.no_attention}});
    }

    void stage_captions(const EvalRecord& rec, uint64_t item_seed, ItemTrace& trace) {
        const CacheKey key = key_for(rec, "captions");
        if (auto hit = cache_.get(key)) {
            trace.captions = hit->at("captions").get<std::vector<Caption>>();
            trace.whole_image_fallback = hit->value("whole_image_fallback", false);
            return;
        }
        const int n = cfg_.effective_num_captions();
        std::vector<Caption> raw;
        try {
            raw = with_retry([&] {
                return generate_captions(rec.image_ref, trace.selection, n, *backends_.captioner,
                                         item_seed);
            });
        } catch (const empty_caption_error&) {
            trace.whole_image_fallback = true;
            raw = with_retry([&] {
                return generate_captions(rec.image_ref, PatchSelection{}, n, *backends_.captioner,
                                         item_seed);
            });
        }
        trace.captions = dedup_captions(raw);
        cache_.put(key, {{"captions", trace.captions},
                         {"whole_image_fallback", trace.whole_image_fallback}});
    }

    void stage_rerank(const EvalRecord& rec, ItemTrace& trace) {
        const CacheKey key = key_for(rec, "rerank");
        if (auto hit = cache_.get(key)) {
            trace.scored = hit->at("scored").get<std::vector<ScoredCaption>>();
            trace.rerank = hit->at("selection").get<CaptionSelection>();
            return;
        }
        trace.scored.clear();
        for (size_t i = 0; i < trace.captions.size(); ++i) {
            trace.scored.push_back(with_retry([&] {
                return score_pair(rec.question, trace.captions[i], static_cast<int>(i),
                                  *backends_.reranker);
            }));
        }
        trace.rerank = select_top_captions(trace.scored, cfg_.rerank_keep);
        cache_.put(key, {{"scored", trace.scored}, {"selection", trace.rerank}});
    }

    std::vector<Caption> reranked_captions(const ItemTrace& trace) const {
        std::vector<Caption> out;
        out.reserve(trace.rerank.ordered.size());
        for (int idx : trace.rerank.ordered) out.push_back(trace.captions[static_cast<size_t>(idx)]);
        return out;
    }

    void stage_summary(const EvalRecord& rec, uint64_t item_seed, ItemTrace& trace) {
        const CacheKey key = key_for(rec, "summary");
        if (auto hit = cache_.get(key)) {
            trace.summary = hit->get<Summary>();
            return;
        }
        trace.summary = summarize(reranked_captions(trace), cfg_.effective_summary_length(),
                                  *backends_.llm, item_seed, assets_.summarize_template);
        cache_.put(key, trace.summary);
    }

    void stage_qa(const EvalRecord& rec, ItemTrace& trace) {
        const CacheKey key = key_for(rec, "qa");
        if (auto hit = cache_.get(key)) {
            trace.qa_pairs = hit->at("pairs").get<std::vector<QAPair>>();
            trace.qa_degraded = hit->value("degraded", false);
            return;
        }
        const std::vector<Caption> ranked = reranked_captions(trace);
        std::vector<QAPair> unfiltered = synthesize_qa_pairs(
            ranked, *backends_.parser, registry_, static_cast<size_t>(cfg_.qa_pair_cap));

        trace.qa_pairs.clear();
        trace.qa_degraded = false;
        for (size_t ci = 0; ci < ranked.size(); ++ci) {
            std::vector<QAPair> for_caption;
            for (const auto& p : unfiltered)
                if (p.source_caption_index == static_cast<int>(ci)) for_caption.push_back(p);
            if (for_caption.empty()) continue;
            FilterOutcome outcome = filter_qa_pairs(for_caption, ranked[ci], *backends_.qa);
            if (outcome.degraded) trace.qa_degraded = true;
            for (auto& p : outcome.pairs) trace.qa_pairs.push_back(std::move(p));
        }
        cache_.put(key, {{"pairs", trace.qa_pairs}, {"degraded", trace.qa_degraded}});
    }

    void stage_answer(const EvalRecord& rec, ItemTrace& trace) {
        trace.prompt = build_item_prompt(rec, trace);
        const CacheKey key = key_for(rec, "answer");
        if (auto hit = cache_.get(key)) {
            trace.prediction = hit->at("prediction").get<AnswerPrediction>();
            return;
        }
        DecodeParams params;
        params.max_new_tokens = cfg_.max_new_tokens;
        trace.prediction = with_retry([&] { return answer(trace.prompt, *backends_.llm, params); });
        cache_.put(key, {{"prediction", trace.prediction}, {"prompt", trace.prompt}});
    }

    // Assembles the bundle for the configured content row. RC rows use the
    // reranked order; plain-C rows use the first rerank_keep captions in
    // generation order, with QA sources remapped onto that list.
    std::string build_item_prompt(const EvalRecord& rec, const ItemTrace& trace) const {
        PromptBundle bundle;
        bundle.question = rec.question;
        bundle.summary = trace.summary.text;

        if (content_uses_reranked_captions(content_) || !content_has_captions(content_)) {
            for (int idx : trace.rerank.ordered)
                bundle.captions.push_back(trace.captions[static_cast<size_t>(idx)].text);
            bundle.qa_pairs = trace.qa_pairs;
        } else {
            const size_t head =
                std::min(static_cast<size_t>(cfg_.rerank_keep), trace.captions.size());
            for (size_t i = 0; i < head; ++i) bundle.captions.push_back(trace.captions[i].text);
            bundle.qa_pairs = trace.qa_pairs;
            for (auto& p : bundle.qa_pairs) {
                // ranked position -> dedup index -> position in the plain head
                const int ranked_pos = p.source_caption_index;
                int remapped = -1;
                if (ranked_pos >= 0 &&
                    ranked_pos < static_cast<int>(trace.rerank.ordered.size())) {
                    const int dedup_index = trace.rerank.ordered[static_cast<size_t>(ranked_pos)];
                    if (dedup_index < static_cast<int>(head)) remapped = dedup_index;
                }
                p.source_caption_index = remapped;
            }
        }
        return build_prompt(bundle, format_, content_, assets_);
    }

    PipelineConfig cfg_;
    Backends backends_;
    TemplateRegistry registry_;
    PromptAssets assets_;
    PromptFormat format_ = PromptFormat::MC_S_MQA;
    PromptContent content_ = PromptContent::I_RC_S_QAP;
    RectifyMode rectify_ = RectifyMode::positive;
    PatchStrategy strategy_ = PatchStrategy::deterministic_topk;
    StageCache cache_;
};

// Grid builders for the ablation and sweep commands.

inline std::vector<AblationCell> content_ablation_grid(
    PromptFormat format = PromptFormat::MC_S_MQA) {
    std::vector<AblationCell> grid;
    for (PromptContent c : all_prompt_contents()) {
        AblationCell cell;
        cell.format = format;
        cell.content = c;
        cell.label = "content:" + to_string(c);
        grid.push_back(std::move(cell));
    }
    return grid;
}

inline std::vector<AblationCell> format_ablation_grid(
    PromptContent content = PromptContent::I_RC_S_QAP) {
    std::vector<AblationCell> grid;
    for (PromptFormat f : all_prompt_formats()) {
        AblationCell cell;
        cell.format = f;
        cell.content = content;
        cell.label = "format:" + to_string(f);
        grid.push_back(std::move(cell));
    }
    return grid;
}

inline std::vector<AblationCell> sweep_grid(const std::string& param,
                                            const std::vector<int>& values,
                                            PromptFormat format = PromptFormat::MC_S_MQA,
                                            PromptContent content = PromptContent::I_RC_S_QAP) {
    std::vector<AblationCell> grid;
    for (int v : values) {
        AblationCell cell;
        cell.format = format;
        cell.content = content;
        cell.hyperparams[param] = std::to_string(v);
        cell.label = "sweep:" + param + "=" + std::to_string(v);
        grid.push_back(std::move(cell));
    }
    return grid;
}

// Applies one grid cell to a base config and runs it; backends are shared
// across cells so caches and call counters line up.
inline std::vector<CellResult> run_grid(const PipelineConfig& base,
                                        const std::vector<AblationCell>& grid,
                                        Backends shared = {}) {
    PipelineConfig checked = base;
    finalize_config(checked);
    if (!shared.captioner) shared = make_backends(checked);
    return run_ablation(grid, [&](const AblationCell& cell) {
        PipelineConfig cfg = base;
        cfg.prompt_format = to_string(cell.format);
        cfg.prompt_content = to_string(cell.content);
        for (const auto& [key, value] : cell.hyperparams) apply_config_value(cfg, key, value);
        Pipeline pipeline(cfg, shared);
        RunOutput out = pipeline.run();
        out.table.config_id = cell.label;
        return std::make_pair(out.table, out.records);
    });
}

} // namespace scra
