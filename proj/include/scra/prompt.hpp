#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scra/errors.hpp"
#include "scra/qa_synthesis.hpp"
#include "scra/summarize.hpp"
#include "scra/text.hpp"

namespace scra {

// Ordering of the context block. The two repetition variants interleave each
// caption with its own QA pairs; the Multi variants render whole blocks.
enum class PromptFormat {
    S_C_QA,    // summary, then repeated (caption + its QA pairs) units
    C_QA_S,    // repeated units, then summary
    MC_MQA_S,  // all captions, all QA pairs, summary
    S_MC_MQA,  // summary, all captions, all QA pairs
    MC_S_MQA,  // all captions, summary, all QA pairs (best-performing order)
};

// Which components enter the prompt at all.
enum class PromptContent {
    I,          // instruction only
    I_C,        // + captions
    I_C_QAP,    // + captions + QA pairs
    I_S_QAP,    // + summary + QA pairs
    I_C_S_QAP,  // + captions + summary + QA pairs
    I_RC_S_QAP, // reranked captions + summary + QA pairs
};

inline const std::vector<PromptFormat>& all_prompt_formats() {
    static const std::vector<PromptFormat> kAll = {
        PromptFormat::S_C_QA, PromptFormat::C_QA_S, PromptFormat::MC_MQA_S,
        PromptFormat::S_MC_MQA, PromptFormat::MC_S_MQA,
    };
    return kAll;
}

inline const std::vector<PromptContent>& all_prompt_contents() {
    static const std::vector<PromptContent> kAll = {
        PromptContent::I,        PromptContent::I_C,       PromptContent::I_C_QAP,
        PromptContent::I_S_QAP,  PromptContent::I_C_S_QAP, PromptContent::I_RC_S_QAP,
    };
    return kAll;
}

inline std::string to_string(PromptFormat f) {
    switch (f) {
        case PromptFormat::S_C_QA: return "S+C+QA";
        case PromptFormat::C_QA_S: return "C+QA+S";
        case PromptFormat::MC_MQA_S: return "MC+MQA+S";
        case PromptFormat::S_MC_MQA: return "S+MC+MQA";
        default: return "MC+S+MQA";
    }
}

inline std::string to_string(PromptContent c) {
    switch (c) {
        case PromptContent::I: return "I";
        case PromptContent::I_C: return "I+C";
        case PromptContent::I_C_QAP: return "I+C+QAP";
        case PromptContent::I_S_QAP: return "I+S+QAP";
        case PromptContent::I_C_S_QAP: return "I+C+S+QAP";
        default: return "I+RC+S+QAP";
    }
}

inline PromptFormat prompt_format_from_string(const std::string& s) {
    for (PromptFormat f : all_prompt_formats())
        if (to_string(f) == s) return f;
    throw validation_error("unknown prompt format: " + s);
}

inline PromptContent prompt_content_from_string(const std::string& s) {
    for (PromptContent c : all_prompt_contents())
        if (to_string(c) == s) return c;
    throw validation_error("unknown prompt content: " + s);
}

// True for the two per-caption interleaved orderings.
inline bool format_repetition(PromptFormat f) {
    return f == PromptFormat::S_C_QA || f == PromptFormat::C_QA_S;
}

inline bool content_has_captions(PromptContent c) {
    return c == PromptContent::I_C || c == PromptContent::I_C_QAP ||
           c == PromptContent::I_C_S_QAP || c == PromptContent::I_RC_S_QAP;
}

inline bool content_has_summary(PromptContent c) {
    return c == PromptContent::I_S_QAP || c == PromptContent::I_C_S_QAP ||
           c == PromptContent::I_RC_S_QAP;
}

inline bool content_has_qa(PromptContent c) {
    return c == PromptContent::I_C_QAP || c == PromptContent::I_S_QAP ||
           c == PromptContent::I_C_S_QAP || c == PromptContent::I_RC_S_QAP;
}

// True when the content row feeds reranked captions into the caption slot
// (I+RC+...); plain-C rows use the captions in generation order.
inline bool content_uses_reranked_captions(PromptContent c) {
    return c == PromptContent::I_RC_S_QAP;
}

// Instruction and label strings used by the serializer, overridable through a
// key=value asset file.
struct PromptAssets {
    std::string instruction = "Please reason the answers to the questions according to the contexts.";
    std::string label_contexts = "Contexts:";
    std::string label_caption = "Rerank_Caption:";
    std::string label_summary = "Summary:";
    std::string label_question = "Question:";
    std::string label_answer = "Answer:";
    std::string summarize_template = std::string(kSummarizePromptTemplate);
    std::string version = "1";

    static const PromptAssets& builtin() {
        static const PromptAssets kAssets;
        return kAssets;
    }

    static PromptAssets load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open prompt asset file: " + path);
        PromptAssets assets;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw validation_error("bad prompt asset line " + std::to_string(lineno) +
                                       " (want key = value): " + t);
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key == "instruction") assets.instruction = value;
            else if (key == "label_contexts") assets.label_contexts = value;
            else if (key == "label_caption") assets.label_caption = value;
            else if (key == "label_summary") assets.label_summary = value;
            else if (key == "label_question") assets.label_question = value;
            else if (key == "label_answer") assets.label_answer = value;
            else if (key == "summarize_template") assets.summarize_template = value;
            else if (key == "version") assets.version = value;
            else throw validation_error("unknown prompt asset key: " + key);
        }
        return assets;
    }
};

// Everything that can enter prompt serialization. captions are expected in
// the order the upstream selection produced.
struct PromptBundle {
    std::string instruction; // empty = asset default
    std::vector<std::string> captions;
    std::optional<std::string> summary;
    std::vector<QAPair> qa_pairs;
    std::string question;
};

namespace detail {

inline void append_caption(std::string& out, const PromptAssets& a, const std::string& text) {
    out += a.label_caption + " " + text + "\n";
}

inline void append_summary(std::string& out, const PromptAssets& a, const std::string& text) {
    out += a.label_summary + " " + text + "\n";
}

inline void append_qa(std::string& out, const PromptAssets& a, const QAPair& pair) {
    out += a.label_question + " " + pair.question + "\n";
    out += a.label_answer + " " + pair.answer + "\n";
}

} // namespace detail

// Serializes the bundle byte-exactly: instruction line, a "Contexts:" block
// ordered by `format` and filtered by `content`, then the terminal
// "Question: {Q}\nAnswer:" with nothing after it.
inline std::string build_prompt(const PromptBundle& bundle, PromptFormat format,
                                PromptContent content,
                                const PromptAssets& assets = PromptAssets::builtin()) {
    if (trim(bundle.question).empty()) throw validation_error("bundle question is empty");

    const bool use_captions = content_has_captions(content);
    const bool use_summary = content_has_summary(content);
    const bool use_qa = content_has_qa(content);

    if (use_captions && bundle.captions.empty())
        throw composition_error("captions", "content " + to_string(content) +
                                                " requires captions but the bundle has none");
    if (use_summary && (!bundle.summary || trim(*bundle.summary).empty()))
        throw composition_error("summary", "content " + to_string(content) +
                                               " requires a summary but the bundle has none");
    if (use_qa && bundle.qa_pairs.empty())
        throw composition_error("qa_pairs", "content " + to_string(content) +
                                                " requires QA pairs but the bundle has none");

    std::string out;
    out += (bundle.instruction.empty() ? assets.instruction : bundle.instruction) + "\n";

    if (use_captions || use_summary || use_qa) {
        out += assets.label_contexts + "\n";

        auto append_all_captions = [&] {
            if (!use_captions) return;
            for (const auto& c : bundle.captions) detail::append_caption(out, assets, c);
        };
        auto append_summary_once = [&] {
            if (!use_summary) return;
            detail::append_summary(out, assets, *bundle.summary);
        };
        auto append_all_qa = [&] {
            if (!use_qa) return;
            for (const auto& p : bundle.qa_pairs) detail::append_qa(out, assets, p);
        };
        // Per-caption units: each caption followed by the QA pairs it sourced;
        // pairs whose source caption is not rendered come after the units.
        auto append_units = [&] {
            std::vector<bool> rendered(bundle.qa_pairs.size(), false);
            if (use_captions) {
                for (size_t ci = 0; ci < bundle.captions.size(); ++ci) {
                    detail::append_caption(out, assets, bundle.captions[ci]);
                    if (!use_qa) continue;
                    for (size_t qi = 0; qi < bundle.qa_pairs.size(); ++qi) {
                        if (bundle.qa_pairs[qi].source_caption_index != static_cast<int>(ci))
                            continue;
                        detail::append_qa(out, assets, bundle.qa_pairs[qi]);
                        rendered[qi] = true;
                    }
                }
            }
            if (use_qa) {
                for (size_t qi = 0; qi < bundle.qa_pairs.size(); ++qi)
                    if (!rendered[qi]) detail::append_qa(out, assets, bundle.qa_pairs[qi]);
            }
        };

        switch (format) {
            case PromptFormat::S_C_QA:
                append_summary_once();
                append_units();
                break;
            case PromptFormat::C_QA_S:
                append_units();
                append_summary_once();
                break;
            case PromptFormat::MC_MQA_S:
                append_all_captions();
                append_all_qa();
                append_summary_once();
                break;
            case PromptFormat::S_MC_MQA:
                append_summary_once();
                append_all_captions();
                append_all_qa();
                break;
            case PromptFormat::MC_S_MQA:
                append_all_captions();
                append_summary_once();
                append_all_qa();
                break;
        }
    }

    out += assets.label_question + " " + bundle.question + "\n";
    out += assets.label_answer;
    return out;
}

} // namespace scra
