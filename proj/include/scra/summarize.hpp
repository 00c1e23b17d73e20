#pragma once

#include <string>
#include <vector>

#include "scra/captioning.hpp"
#include "scra/completion.hpp"
#include "scra/errors.hpp"
#include "scra/text.hpp"

namespace scra {

// Tokens of slack past the target before truncation kicks in. Wide enough
// that a summary rarely gets cut mid-sentence, narrow enough that length
// regimes stay distinct.
inline constexpr int kSummarySlackTokens = 8;

inline constexpr std::string_view kSummarizePromptTemplate =
    "Summarize the following image descriptions in at most {L} words, keeping objects, "
    "actions, and attributes: {captions}";

struct Summary {
    std::string text;
    int target_length = 0; // reference tokens
    std::string backend_id;
    std::vector<int> source_caption_indices;
    bool degraded = false; // backend failed, text is the top-2 caption fallback
};

inline std::string render_summarize_prompt(const std::vector<Caption>& captions,
                                           int target_length,
                                           std::string_view prompt_template = kSummarizePromptTemplate) {
    std::vector<std::string> texts;
    texts.reserve(captions.size());
    for (const auto& c : captions) texts.push_back(c.text);
    std::string prompt(prompt_template);
    auto replace_all = [&prompt](std::string_view what, const std::string& with) {
        size_t pos;
        while ((pos = prompt.find(what)) != std::string::npos)
            prompt.replace(pos, what.size(), with);
    };
    replace_all("{L}", std::to_string(target_length));
    replace_all("{captions}", join(texts, "; "));
    return prompt;
}

// Condenses the reranked captions into one summary whose reference token
// count stays within target_length + slack. Captions are expected in rerank
// order; on backend failure the top two are concatenated verbatim instead.
inline Summary summarize(const std::vector<Caption>& captions, int target_length,
                         TextCompleter& backend, uint64_t seed,
                         std::string_view prompt_template = kSummarizePromptTemplate) {
    if (captions.empty()) throw validation_error("summarize needs at least one caption");
    if (target_length < 16) throw validation_error("summary target length must be >= 16 tokens");

    Summary summary;
    summary.target_length = target_length;
    summary.backend_id = backend.id();
    for (size_t i = 0; i < captions.size(); ++i)
        summary.source_caption_indices.push_back(static_cast<int>(i));

    const size_t cap = static_cast<size_t>(target_length) + kSummarySlackTokens;
    std::string generation;
    bool failed = false;
    try {
        generation = trim(backend.complete(render_summarize_prompt(captions, target_length,
                                                                   prompt_template),
                                           target_length + kSummarySlackTokens, seed));
    } catch (const std::exception&) {
        failed = true;
    }
    if (failed || generation.empty()) {
        summary.degraded = true;
        summary.text = captions[0].text;
        if (captions.size() > 1) summary.text += ". " + captions[1].text;
        return summary;
    }
    summary.text = truncate_to_tokens(generation, cap);
    return summary;
}

} // namespace scra
