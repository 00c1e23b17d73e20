#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace scra {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

// A token of the reference tokenizer, with byte offsets into the source text.
struct Token {
    std::string text;
    size_t begin = 0;
    size_t end = 0; // one past the last byte
};

// Reference whitespace-plus-punctuation tokenizer. Words are maximal runs of
// non-space, non-punctuation bytes; every punctuation byte is its own token.
// Summary length enforcement counts these tokens, nothing model-specific.
inline std::vector<Token> reference_tokenize(std::string_view s) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
            continue;
        }
        if (is_punct(s[i])) {
            out.push_back({std::string(1, s[i]), i, i + 1});
            ++i;
            continue;
        }
        size_t b = i;
        while (i < s.size() && !is_space(s[i]) && !is_punct(s[i])) ++i;
        out.push_back({std::string(s.substr(b, i - b)), b, i});
    }
    return out;
}

inline size_t reference_token_count(std::string_view s) { return reference_tokenize(s).size(); }

inline bool is_sentence_end(const std::string& token) {
    return token == "." || token == "!" || token == "?";
}

// Cuts text to at most max_tokens reference tokens. If the window contains a
// sentence-ending token, the cut lands after the last of those instead of
// mid-sentence.
inline std::string truncate_to_tokens(const std::string& text, size_t max_tokens) {
    std::vector<Token> toks = reference_tokenize(text);
    if (toks.size() <= max_tokens) return trim(text);
    size_t cut_end = toks[max_tokens - 1].end;
    for (size_t i = max_tokens; i-- > 0;) {
        if (is_sentence_end(toks[i].text)) {
            cut_end = toks[i].end;
            break;
        }
    }
    return trim(std::string_view(text).substr(0, cut_end));
}

} // namespace scra
