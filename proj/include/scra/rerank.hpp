#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scra/captioning.hpp"
#include "scra/errors.hpp"

namespace scra {

struct ScoredCaption {
    int caption_index = 0;
    double score = 0.0;
    std::string backend_id;
};

// Result of top-k selection: caption indices ordered by nonincreasing score.
struct CaptionSelection {
    std::vector<int> ordered;
    int k = 0;
    bool empty_input = false;
};

// Cross-encoder that scores one (question, caption) pair at a time.
class RerankerBackend {
public:
    virtual ~RerankerBackend() = default;
    virtual std::string id() const = 0;
    virtual double score(const std::string& question, const std::string& caption) = 0;
    virtual int max_concurrency() const { return 1; }
};

// One-to-one relevance of a single caption to the question. Pairs are scored
// independently; there is no listwise interaction.
inline ScoredCaption score_pair(const std::string& question, const Caption& caption,
                                int caption_index, RerankerBackend& backend) {
    if (trim(question).empty()) throw validation_error("question text is empty");
    if (trim(caption.text).empty()) throw validation_error("caption text is empty");
    double s = 0.0;
    try {
        s = backend.score(question, caption.text);
    } catch (const backend_error&) {
        throw;
    } catch (const std::exception& e) {
        throw backend_error(backend.id(), e.what(), true);
    }
    if (!std::isfinite(s))
        throw backend_error(backend.id(), "reranker returned non-finite score", false);
    return {caption_index, s, backend.id()};
}

// Keeps the k highest-scoring captions, ordered by score, ties broken toward
// the lower original index.
inline CaptionSelection select_top_captions(const std::vector<ScoredCaption>& scored, int k) {
    if (k < 1) throw validation_error("selection size k must be >= 1");
    CaptionSelection sel;
    sel.k = k;
    if (scored.empty()) {
        sel.empty_input = true;
        return sel;
    }
    std::vector<const ScoredCaption*> order;
    order.reserve(scored.size());
    for (const auto& s : scored) {
        if (!std::isfinite(s.score)) throw validation_error("scored caption has non-finite score");
        order.push_back(&s);
    }
    std::stable_sort(order.begin(), order.end(), [](const ScoredCaption* a, const ScoredCaption* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->caption_index < b->caption_index;
    });
    const size_t take = std::min(static_cast<size_t>(k), order.size());
    for (size_t i = 0; i < take; ++i) sel.ordered.push_back(order[i]->caption_index);
    return sel;
}

} // namespace scra
