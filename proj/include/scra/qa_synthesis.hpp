#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scra/answer.hpp"
#include "scra/captioning.hpp"
#include "scra/completion.hpp"
#include "scra/errors.hpp"
#include "scra/text.hpp"

namespace scra {

enum class PosClass { noun, verb, adjective };

inline std::string to_string(PosClass p) {
    switch (p) {
        case PosClass::noun: return "noun";
        case PosClass::verb: return "verb";
        default: return "adjective";
    }
}

// A caption span that can serve as an exemplar answer.
struct AnswerCandidate {
    std::string span;
    PosClass pos = PosClass::noun;
    int source_caption_index = -1;
    std::optional<std::string> adj_type; // set only for adjectives
};

struct QAPair {
    std::string question;
    std::string answer;
    std::string template_id; // "<pos>/<index>" into the registry
    int source_caption_index = -1;
    bool passed_filter = false;
};

inline constexpr std::string_view kAdjTypePlaceholder = "ADJ TYPE";

// The question templates, two for nouns, four for verbs, three for
// adjectives. Editable through a plain text file; the built-in set is the
// default.
class TemplateRegistry {
public:
    static TemplateRegistry builtin() {
        TemplateRegistry reg;
        reg.noun_ = {
            "What item is this in this picture?",
            "What item is that in this picture?",
        };
        reg.verb_ = {
            "What action is being taken in this picture?",
            "Why is this item in this picture?",
            "Which action is being taken in this picture?",
            "What action is the item doing in this picture?",
        };
        reg.adjective_ = {
            "How to describe one item in this picture?",
            "What is the item's ADJ TYPE in this picture?",
            "What is the ADJ TYPE in this picture?",
        };
        return reg;
    }

    // File format: one template per line under a [noun] / [verb] /
    // [adjective] section header; '#' starts a comment.
    static TemplateRegistry load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open template registry: " + path);
        TemplateRegistry reg;
        std::string line;
        std::vector<std::string>* section = nullptr;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t == "[noun]") {
                section = &reg.noun_;
            } else if (t == "[verb]") {
                section = &reg.verb_;
            } else if (t == "[adjective]") {
                section = &reg.adjective_;
            } else {
                if (!section)
                    throw validation_error("template outside of a POS section: " + t);
                if (!t.ends_with("?"))
                    throw validation_error("template must end with '?': " + t);
                section->push_back(t);
            }
        }
        if (reg.noun_.empty() || reg.verb_.empty() || reg.adjective_.empty())
            throw validation_error("template registry is missing a POS section: " + path);
        return reg;
    }

    const std::vector<std::string>& templates(PosClass pos) const {
        switch (pos) {
            case PosClass::noun: return noun_;
            case PosClass::verb: return verb_;
            default: return adjective_;
        }
    }

private:
    std::vector<std::string> noun_;
    std::vector<std::string> verb_;
    std::vector<std::string> adjective_;
};

// Maps adjectives to their attribute type ("red" -> "color"). Anything
// unknown falls back to "attribute".
class AdjTypeLexicon {
public:
    static AdjTypeLexicon builtin() {
        AdjTypeLexicon lex;
        auto add = [&lex](std::initializer_list<const char*> words, const char* type) {
            for (const char* w : words) lex.types_[w] = type;
        };
        add({"red", "blue", "green", "yellow", "black", "white", "brown", "orange", "purple",
             "pink", "gray", "grey", "golden"},
            "color");
        add({"small", "large", "big", "tiny", "huge", "little", "tall", "short", "long"}, "size");
        add({"wooden", "metal", "plastic", "glass", "leather", "stone", "brick"}, "material");
        add({"round", "square", "rectangular", "circular", "oval", "curved"}, "shape");
        return lex;
    }

    // File format: "<adjective> <type>" per line, '#' comments.
    static AdjTypeLexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open adjective type lexicon: " + path);
        AdjTypeLexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            auto parts = split_whitespace(t);
            if (parts.size() != 2)
                throw validation_error("bad lexicon line (want '<adjective> <type>'): " + t);
            lex.types_[to_lower(parts[0])] = parts[1];
        }
        return lex;
    }

    std::optional<std::string> lookup(const std::string& adjective) const {
        auto it = types_.find(to_lower(adjective));
        if (it == types_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, std::string> types_;
};

// Syntactic parser that tags answer candidates in a caption.
class PosParserBackend {
public:
    virtual ~PosParserBackend() = default;
    virtual std::string id() const = 0;
    virtual std::vector<AnswerCandidate> parse(const std::string& text) = 0;
};

// In-repo fallback parser: closed word lists, no model. Candidates come out
// grouped by POS class (nouns, then verbs, then adjectives), each group in
// sentence order.
class RuleBasedPosParser : public PosParserBackend {
public:
    RuleBasedPosParser() : RuleBasedPosParser(AdjTypeLexicon::builtin()) {}

    explicit RuleBasedPosParser(AdjTypeLexicon lexicon)
        : lexicon_(std::move(lexicon)),
          nouns_{"dog",      "cat",    "ball",     "man",     "woman",   "boy",    "girl",
                 "grass",    "tree",   "car",      "bus",     "train",   "kite",   "string",
                 "table",    "chair",  "pizza",    "sandwich", "bird",   "horse",  "park",
                 "street",   "room",   "field",    "beach",   "kitchen", "bathroom", "shower",
                 "wave",     "surfboard", "surfer", "wetsuit", "frisbee", "umbrella", "bicycle",
                 "house",    "water",  "sky",      "child",   "player",  "food",   "plate",
                 "bottle",   "phone",  "book",     "hat",     "shirt",   "sign",   "clock",
                 "boat"},
          verbs_{"running", "playing", "standing", "sitting", "jumping", "flying", "riding",
                 "walking", "eating",  "holding",  "surfing", "skiing",  "throwing", "catching",
                 "swimming", "sleeping", "reading", "cooking", "waiting", "looking"},
          adjectives_{"red",   "blue",   "green", "yellow", "black",  "white",  "brown",
                      "orange", "purple", "pink",  "gray",   "grey",   "golden", "small",
                      "large", "big",    "tiny",  "huge",   "little", "tall",   "short",
                      "long",  "wooden", "metal", "plastic", "glass", "leather", "stone",
                      "brick", "round",  "square", "rectangular", "circular", "oval", "curved",
                      "shiny", "old",    "young", "new"} {}

    std::string id() const override { return "rule-pos-parser"; }

    std::vector<AnswerCandidate> parse(const std::string& text) override {
        std::vector<Token> tokens = reference_tokenize(text);
        std::vector<AnswerCandidate> out;
        auto scan = [&](const std::set<std::string>& words, PosClass pos) {
            for (const auto& tok : tokens) {
                std::string lower = to_lower(tok.text);
                if (!words.count(lower)) continue;
                AnswerCandidate cand;
                cand.span = tok.text;
                cand.pos = pos;
                if (pos == PosClass::adjective) cand.adj_type = lexicon_.lookup(lower);
                out.push_back(std::move(cand));
            }
        };
        scan(nouns_, PosClass::noun);
        scan(verbs_, PosClass::verb);
        scan(adjectives_, PosClass::adjective);
        return out;
    }

private:
    AdjTypeLexicon lexicon_;
    std::set<std::string> nouns_;
    std::set<std::string> verbs_;
    std::set<std::string> adjectives_;
};

// Answers a question from a single caption; used by the consistency filter.
class QaAnswerer {
public:
    virtual ~QaAnswerer() = default;
    virtual std::string id() const = 0;
    virtual std::string answer(const std::string& context, const std::string& question) = 0;
};

// Routes the consistency check through the shared completion backend.
class CompleterQaAnswerer : public QaAnswerer {
public:
    explicit CompleterQaAnswerer(TextCompleter& completer) : completer_(&completer) {}

    std::string id() const override { return "completer:" + completer_->id(); }

    std::string answer(const std::string& context, const std::string& question) override {
        std::string prompt = "Context: " + context + "\nQuestion: " + question + "\nAnswer:";
        std::string generation = completer_->complete(prompt, 10, 0);
        const size_t nl = generation.find('\n');
        return nl == std::string::npos ? generation : generation.substr(0, nl);
    }

private:
    TextCompleter* completer_;
};

// All noun/verb/adjective spans the parser finds, deduplicated by
// (span, pos) with the first occurrence kept.
inline std::vector<AnswerCandidate> extract_answer_candidates(const Caption& caption,
                                                              PosParserBackend& parser,
                                                              int source_caption_index = -1) {
    if (trim(caption.text).empty()) throw validation_error("caption text is empty");
    std::vector<AnswerCandidate> raw;
    try {
        raw = parser.parse(caption.text);
    } catch (const backend_error&) {
        throw;
    } catch (const std::exception& e) {
        throw backend_error(parser.id(), e.what(), true);
    }
    std::vector<AnswerCandidate> out;
    std::set<std::pair<std::string, PosClass>> seen;
    for (auto& cand : raw) {
        if (cand.span.empty()) continue;
        auto key = std::make_pair(to_lower(cand.span), cand.pos);
        if (seen.count(key)) continue;
        seen.insert(key);
        cand.source_caption_index = source_caption_index;
        out.push_back(std::move(cand));
    }
    return out;
}

inline std::string substitute_adj_type(const std::string& tmpl, const std::string& adj_type) {
    std::string out = tmpl;
    size_t pos;
    while ((pos = out.find(kAdjTypePlaceholder)) != std::string::npos)
        out.replace(pos, kAdjTypePlaceholder.size(), adj_type);
    return out;
}

// Expands every registered template for the candidate's POS class. The
// candidate span is the answer of each produced pair.
inline std::vector<QAPair> instantiate_questions(const AnswerCandidate& candidate,
                                                 const TemplateRegistry& registry =
                                                     TemplateRegistry::builtin()) {
    if (candidate.span.empty()) throw validation_error("answer candidate span is empty");
    const auto& templates = registry.templates(candidate.pos);
    std::vector<QAPair> out;
    out.reserve(templates.size());
    const std::string adj_type = candidate.adj_type.value_or("attribute");
    for (size_t i = 0; i < templates.size(); ++i) {
        QAPair pair;
        pair.question = substitute_adj_type(templates[i], adj_type);
        pair.answer = candidate.span;
        pair.template_id = to_string(candidate.pos) + "/" + std::to_string(i);
        pair.source_caption_index = candidate.source_caption_index;
        out.push_back(std::move(pair));
    }
    return out;
}

struct FilterOutcome {
    std::vector<QAPair> pairs;
    bool degraded = false; // answerer failed, pairs returned unfiltered
};

// Consistency validation: a pair survives iff the answerer, reading only the
// caption, reproduces the expected answer after normalization. On backend
// failure all pairs pass through unfiltered and the outcome is flagged.
inline FilterOutcome filter_qa_pairs(const std::vector<QAPair>& pairs, const Caption& caption,
                                     QaAnswerer& answerer) {
    FilterOutcome outcome;
    for (const auto& pair : pairs) {
        std::string predicted;
        try {
            predicted = answerer.answer(caption.text, pair.question);
        } catch (const std::exception&) {
            outcome.degraded = true;
            outcome.pairs = pairs;
            return outcome;
        }
        if (normalize_answer(predicted) == normalize_answer(pair.answer)) {
            QAPair kept = pair;
            kept.passed_filter = true;
            outcome.pairs.push_back(std::move(kept));
        }
    }
    return outcome;
}

// Caption-list synthesis used by the pipeline: candidates from each caption
// (given in rerank order), templates expanded, hard-capped before filtering.
inline std::vector<QAPair> synthesize_qa_pairs(const std::vector<Caption>& captions_in_rank_order,
                                               PosParserBackend& parser,
                                               const TemplateRegistry& registry,
                                               size_t max_pairs = 30) {
    std::vector<QAPair> out;
    for (size_t ci = 0; ci < captions_in_rank_order.size() && out.size() < max_pairs; ++ci) {
        auto candidates =
            extract_answer_candidates(captions_in_rank_order[ci], parser, static_cast<int>(ci));
        for (const auto& cand : candidates) {
            for (auto& pair : instantiate_questions(cand, registry)) {
                if (out.size() >= max_pairs) return out;
                out.push_back(std::move(pair));
            }
        }
    }
    return out;
}

} // namespace scra
