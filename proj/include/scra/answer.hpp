#pragma once

#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scra/completion.hpp"
#include "scra/errors.hpp"
#include "scra/hash.hpp"
#include "scra/text.hpp"

namespace scra {

struct DecodeParams {
    int max_new_tokens = 10;
    double temperature = 0.0; // greedy; anything else is backend-dependent
};

struct AnswerPrediction {
    std::string raw;        // generation up to the first newline
    std::string normalized; // canonical short answer
    std::string prompt_hash;
    std::string backend_id;
    DecodeParams decode;
    bool empty_answer = false;
};

// Number words mapped during normalization. Bounded at ten by default;
// extendable through a "<word> <digits>" lexicon file.
using NumberLexicon = std::map<std::string, std::string>;

inline const NumberLexicon& builtin_number_lexicon() {
    static const NumberLexicon kNumbers = {
        {"zero", "0"}, {"one", "1"}, {"two", "2"},   {"three", "3"}, {"four", "4"}, {"five", "5"},
        {"six", "6"},  {"seven", "7"}, {"eight", "8"}, {"nine", "9"},  {"ten", "10"},
    };
    return kNumbers;
}

inline NumberLexicon load_number_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open number lexicon: " + path);
    NumberLexicon lex = builtin_number_lexicon();
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto parts = split_whitespace(t);
        if (parts.size() != 2)
            throw validation_error("bad number lexicon line (want '<word> <digits>'): " + t);
        lex[to_lower(parts[0])] = parts[1];
    }
    return lex;
}

// Canonical short-answer form: lowercase, punctuation removed, articles
// dropped, whitespace collapsed, number words mapped to digits.
inline std::string normalize_answer(const std::string& text,
                                    const NumberLexicon& numbers = builtin_number_lexicon()) {
    std::string lowered = to_lower(text);
    std::string stripped;
    stripped.reserve(lowered.size());
    for (char c : lowered) {
        if (!is_punct(c)) stripped.push_back(c);
    }

    std::vector<std::string> tokens = split_whitespace(stripped);
    std::vector<std::string> kept;
    kept.reserve(tokens.size());
    for (auto& tok : tokens) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        auto it = numbers.find(tok);
        if (it != numbers.end()) tok = it->second;
        kept.push_back(std::move(tok));
    }
    return join(kept, " ");
}

// Sends the built prompt to the frozen model and post-processes the
// generation: cut at the first newline, keep the raw text, normalize.
inline AnswerPrediction answer(const std::string& prompt, TextCompleter& backend,
                               DecodeParams params = {}) {
    if (prompt.empty()) throw validation_error("prompt is empty");
    if (!prompt.ends_with("Answer:"))
        throw validation_error("prompt must end with \"Answer:\"");

    std::string generation;
    try {
        generation = backend.complete(prompt, params.max_new_tokens, 0);
    } catch (const backend_error&) {
        throw;
    } catch (const std::exception& e) {
        throw backend_error(backend.id(), e.what(), true);
    }

    AnswerPrediction pred;
    pred.decode = params;
    pred.backend_id = backend.id();
    pred.prompt_hash = fnv1a64_hex(prompt);
    const size_t nl = generation.find('\n');
    pred.raw = nl == std::string::npos ? generation : generation.substr(0, nl);
    pred.normalized = normalize_answer(pred.raw);
    pred.empty_answer = pred.normalized.empty();
    return pred;
}

// Batch entry point with per-item semantics identical to answer(). True
// batching is a backend capability; this default issues the calls in order.
inline std::vector<AnswerPrediction> answer_batch(const std::vector<std::string>& prompts,
                                                  TextCompleter& backend,
                                                  DecodeParams params = {}) {
    std::vector<AnswerPrediction> out;
    out.reserve(prompts.size());
    for (const auto& prompt : prompts) out.push_back(answer(prompt, backend, params));
    return out;
}

} // namespace scra
