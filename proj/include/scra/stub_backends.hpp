#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "scra/captioning.hpp"
#include "scra/completion.hpp"
#include "scra/hash.hpp"
#include "scra/qa_synthesis.hpp"
#include "scra/rerank.hpp"
#include "scra/text.hpp"

namespace scra {

// Deterministic stand-ins for the frozen models. Every output is a pure
// function of the inputs (hash-derived), so pipeline runs reproduce
// bit-exactly and tests never need weights. Call counters let tests verify
// that warm caches skip the backends entirely.

namespace stub_detail {

inline const std::vector<std::string>& adjective_pool() {
    static const std::vector<std::string> kPool = {"red",    "blue",  "small", "large", "wooden",
                                                   "white",  "black", "round", "shiny", "old"};
    return kPool;
}

inline const std::vector<std::string>& noun_pool() {
    static const std::vector<std::string> kPool = {"dog",  "ball", "man",  "kite", "cat",
                                                   "table", "car",  "tree", "bird", "pizza"};
    return kPool;
}

inline const std::vector<std::string>& verb_pool() {
    static const std::vector<std::string> kPool = {"running",  "playing", "standing",
                                                   "sitting",  "jumping", "flying"};
    return kPool;
}

inline const std::vector<std::string>& scene_pool() {
    static const std::vector<std::string> kPool = {"park",  "street", "room",
                                                   "field", "beach",  "kitchen"};
    return kPool;
}

inline std::string pick(const std::vector<std::string>& pool, uint64_t h) {
    return pool[static_cast<size_t>(h % pool.size())];
}

inline std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (int x : v) {
        if (!out.empty()) out += ",";
        out += std::to_string(x);
    }
    return out;
}

} // namespace stub_detail

// Hash-phrase captioner with synthetic attention export. The phrase
// vocabulary is drawn from the rule parser's word lists so downstream QA
// synthesis always finds candidates.
class StubCaptioner : public CaptionerBackend {
public:
    explicit StubCaptioner(int grid_patches = 576, int heads = 2, int text_tokens = 4)
        : grid_patches_(grid_patches), heads_(heads), text_tokens_(text_tokens) {}

    std::string id() const override { return "stub-captioner"; }

    CaptionerCapabilities capabilities() const override {
        CaptionerCapabilities caps;
        caps.max_captions_per_call = 64;
        caps.supports_patch_masking = true;
        caps.supports_attention_export = true;
        caps.max_concurrency = 8;
        return caps;
    }

    int patch_count() const override { return grid_patches_; }

    std::vector<std::string> generate(const std::string& image_ref,
                                      const std::vector<int>& patch_indices, int n,
                                      uint64_t seed) override {
        ++calls_;
        if (fail_refs_.count(image_ref))
            throw backend_error(id(), "scripted failure for " + image_ref, false);
        std::vector<std::string> out;
        const uint64_t base = hash_strings(
            {image_ref, stub_detail::join_ints(patch_indices), std::to_string(seed)});
        for (int i = 0; i < n; ++i) {
            const uint64_t h = hash_mix(base, static_cast<uint64_t>(i));
            std::string text = "a " + stub_detail::pick(stub_detail::adjective_pool(), h) + " " +
                               stub_detail::pick(stub_detail::noun_pool(), h >> 8) + " " +
                               stub_detail::pick(stub_detail::verb_pool(), h >> 16) +
                               " near the " +
                               stub_detail::pick(stub_detail::scene_pool(), h >> 24);
            out.push_back(std::move(text));
        }
        return out;
    }

    AttentionTensor export_attention(const std::string& image_ref,
                                     const std::string& question) override {
        ++calls_;
        if (fail_refs_.count(image_ref))
            throw backend_error(id(), "scripted failure for " + image_ref, false);
        AttentionTensor attn;
        DeterministicRng rng(hash_strings({image_ref, question, "attention"}));
        for (int g = 0; g < heads_; ++g) {
            Eigen::MatrixXd values(text_tokens_, grid_patches_);
            Eigen::MatrixXd grads(text_tokens_, grid_patches_);
            for (int t = 0; t < text_tokens_; ++t) {
                double sum = 0.0;
                for (int p = 0; p < grid_patches_; ++p) {
                    const double v = 0.05 + rng.next_unit();
                    values(t, p) = v;
                    sum += v;
                    grads(t, p) = rng.next_unit() * 2.0 - 1.0;
                }
                values.row(t) /= sum;
            }
            attn.values.push_back(std::move(values));
            attn.grads.push_back(std::move(grads));
        }
        return attn;
    }

    // Makes every call for this image fail, for failure-isolation tests.
    void fail_for(const std::string& image_ref) { fail_refs_.insert(image_ref); }

    long calls() const { return calls_.load(); }

private:
    int grid_patches_;
    int heads_;
    int text_tokens_;
    std::set<std::string> fail_refs_;
    std::atomic<long> calls_{0};
};

// Test captioner that replays a fixed script per image, one string per
// requested caption, in order. Exhausted scripts yield nothing.
class ScriptedCaptioner : public CaptionerBackend {
public:
    explicit ScriptedCaptioner(int grid_patches = 576) : grid_patches_(grid_patches) {}

    void script(const std::string& image_ref, std::vector<std::string> captions) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& q = scripts_[image_ref];
        for (auto& c : captions) q.push_back(std::move(c));
    }

    std::string id() const override { return "scripted-captioner"; }

    CaptionerCapabilities capabilities() const override { return {}; }

    int patch_count() const override { return grid_patches_; }

    std::vector<std::string> generate(const std::string& image_ref, const std::vector<int>&,
                                      int n, uint64_t) override {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
        std::vector<std::string> out;
        auto it = scripts_.find(image_ref);
        if (it == scripts_.end()) return out;
        auto& q = it->second;
        while (!q.empty() && static_cast<int>(out.size()) < n) {
            out.push_back(std::move(q.front()));
            q.pop_front();
        }
        return out;
    }

    long calls() const { return calls_; }

private:
    int grid_patches_;
    std::map<std::string, std::deque<std::string>> scripts_;
    long calls_ = 0;
    std::mutex mutex_;
};

// Hash-scored cross-encoder. Scores are uniform in [0, 1), fixed for a given
// (question, caption) pair; an explicit table overrides the hash.
class StubReranker : public RerankerBackend {
public:
    std::string id() const override { return "stub-reranker"; }

    double score(const std::string& question, const std::string& caption) override {
        ++calls_;
        auto it = table_.find({question, caption});
        if (it != table_.end()) return it->second;
        return unit_interval(hash_strings({question, caption, "rerank"}));
    }

    void set_score(const std::string& question, const std::string& caption, double s) {
        table_[{question, caption}] = s;
    }

    int max_concurrency() const override { return 8; }

    long calls() const { return calls_.load(); }

private:
    std::map<std::pair<std::string, std::string>, double> table_;
    std::atomic<long> calls_{0};
};

// Completion stub. Resolution order: exact prompt script, summarize-prompt
// echo, scripted answer for the terminal question, first in-context exemplar
// answer, hash-picked noun. Generated answers carry a trailing
// "\nQuestion:" continuation like a real model rambling past the answer.
class StubCompleter : public TextCompleter {
public:
    std::string id() const override { return "stub-llm"; }

    std::string complete(const std::string& prompt, int /*max_tokens*/, uint64_t /*seed*/) override {
        ++calls_;
        if (auto it = exact_script_.find(prompt); it != exact_script_.end()) return it->second;

        if (prompt.starts_with("Summarize the following image descriptions")) {
            const std::string marker = "attributes: ";
            const size_t pos = prompt.rfind(marker);
            std::string body = pos == std::string::npos ? prompt : prompt.substr(pos + marker.size());
            // echo the descriptions as sentences; the summarizer trims length
            std::string out;
            for (const auto& part : split_on_semicolon(body)) {
                if (!out.empty()) out += " ";
                out += trim(part) + ".";
            }
            return out;
        }

        const std::string terminal = terminal_question(prompt);
        if (!terminal.empty()) {
            if (auto it = question_script_.find(terminal); it != question_script_.end())
                return it->second + "\nQuestion:";
            const std::string exemplar = first_exemplar_answer(prompt);
            if (!exemplar.empty()) return exemplar + "\nQuestion:";
        }
        return stub_detail::pick(stub_detail::noun_pool(), hash_strings({prompt, "completion"})) +
               "\nQuestion:";
    }

    void script_exact(const std::string& prompt, const std::string& output) {
        exact_script_[prompt] = output;
    }

    // Fixed answer whenever the prompt's final question equals `question`.
    void script_answer(const std::string& question, const std::string& answer) {
        question_script_[question] = answer;
    }

    int max_concurrency() const override { return 8; }

    long calls() const { return calls_.load(); }

private:
    static std::vector<std::string> split_on_semicolon(const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s) {
            if (c == ';') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!trim(cur).empty()) parts.push_back(cur);
        return parts;
    }

    // Content of the last "Question: ..." line when the prompt ends with the
    // answer cue.
    static std::string terminal_question(const std::string& prompt) {
        if (!prompt.ends_with("Answer:")) return "";
        const size_t q = prompt.rfind("Question: ");
        if (q == std::string::npos) return "";
        const size_t eol = prompt.find('\n', q);
        if (eol == std::string::npos) return "";
        return prompt.substr(q + 10, eol - q - 10);
    }

    // First "Answer: x" exemplar line strictly before the terminal cue.
    static std::string first_exemplar_answer(const std::string& prompt) {
        size_t pos = prompt.find("Answer: ");
        if (pos == std::string::npos) return "";
        const size_t eol = prompt.find('\n', pos);
        if (eol == std::string::npos) return ""; // that was the terminal cue
        return prompt.substr(pos + 8, eol - pos - 8);
    }

    std::map<std::string, std::string> exact_script_;
    std::map<std::string, std::string> question_script_;
    std::atomic<long> calls_{0};
};

// Consistency-filter answerer that reads the caption with the rule parser
// and answers with the first candidate matching the question's POS class
// (and adjective type, when the question names one).
class StubQaAnswerer : public QaAnswerer {
public:
    explicit StubQaAnswerer(TemplateRegistry registry = TemplateRegistry::builtin())
        : registry_(std::move(registry)) {}

    std::string id() const override { return "stub-qa-answerer"; }

    std::string answer(const std::string& context, const std::string& question) override {
        ++calls_;
        PosClass pos;
        std::string adj_type;
        if (!classify(question, pos, adj_type)) return "unknown";
        auto candidates = parser_.parse(context);
        for (const auto& cand : candidates) {
            if (cand.pos != pos) continue;
            if (pos == PosClass::adjective && !adj_type.empty() && adj_type != "attribute" &&
                cand.adj_type.value_or("attribute") != adj_type)
                continue;
            return cand.span;
        }
        return "unknown";
    }

    long calls() const { return calls_.load(); }

private:
    bool classify(const std::string& question, PosClass& pos, std::string& adj_type) const {
        for (PosClass p : {PosClass::noun, PosClass::verb, PosClass::adjective}) {
            for (const auto& tmpl : registry_.templates(p)) {
                const size_t ph = tmpl.find(kAdjTypePlaceholder);
                if (ph == std::string::npos) {
                    if (tmpl == question) {
                        pos = p;
                        adj_type.clear();
                        return true;
                    }
                    continue;
                }
                const std::string prefix = tmpl.substr(0, ph);
                const std::string suffix = tmpl.substr(ph + kAdjTypePlaceholder.size());
                if (question.size() > prefix.size() + suffix.size() &&
                    question.starts_with(prefix) && question.ends_with(suffix)) {
                    pos = p;
                    adj_type = question.substr(prefix.size(),
                                               question.size() - prefix.size() - suffix.size());
                    return true;
                }
            }
        }
        return false;
    }

    TemplateRegistry registry_;
    RuleBasedPosParser parser_;
    std::atomic<long> calls_{0};
};

// Lambda adapters for unit tests.

class FnCompleter : public TextCompleter {
public:
    using Fn = std::function<std::string(const std::string&, int, uint64_t)>;

    FnCompleter(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    std::string id() const override { return id_; }

    std::string complete(const std::string& prompt, int max_tokens, uint64_t seed) override {
        ++calls_;
        return fn_(prompt, max_tokens, seed);
    }

    long calls() const { return calls_.load(); }

private:
    std::string id_;
    Fn fn_;
    std::atomic<long> calls_{0};
};

class FnQaAnswerer : public QaAnswerer {
public:
    using Fn = std::function<std::string(const std::string&, const std::string&)>;

    FnQaAnswerer(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    std::string id() const override { return id_; }

    std::string answer(const std::string& context, const std::string& question) override {
        return fn_(context, question);
    }

private:
    std::string id_;
    Fn fn_;
};

} // namespace scra
