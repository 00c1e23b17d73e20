#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scra/errors.hpp"
#include "scra/hash.hpp"
#include "scra/relevance.hpp"
#include "scra/text.hpp"

namespace scra {

// One region description. Empty patch_indices means the whole image.
struct Caption {
    std::string text;
    std::vector<int> patch_indices;
    std::string backend_id;
    int gen_index = 0;
};

struct CaptionerCapabilities {
    int max_captions_per_call = 1;
    bool supports_patch_masking = false;
    bool supports_attention_export = false;
    int max_concurrency = 1;
};

// Frozen captioning model behind the pipeline. How a patch subset conditions
// the generation (masking, cropping) is the backend's business; the pipeline
// only hands over patch ids.
class CaptionerBackend {
public:
    virtual ~CaptionerBackend() = default;

    virtual std::string id() const = 0;
    virtual CaptionerCapabilities capabilities() const = 0;

    // Number of patches in the backend's image grid.
    virtual int patch_count() const = 0;

    // Returns up to n caption strings for the image conditioned on
    // patch_indices (empty = whole image).
    virtual std::vector<std::string> generate(const std::string& image_ref,
                                              const std::vector<int>& patch_indices, int n,
                                              uint64_t seed) = 0;

    // Cross-attention values and matching-score gradients for (image,
    // question). Only meaningful when capabilities().supports_attention_export.
    virtual AttentionTensor export_attention(const std::string& image_ref,
                                             const std::string& question) {
        (void)image_ref;
        (void)question;
        throw backend_error(id(), "attention export not supported", false);
    }
};

// Key under which two captions count as duplicates: lowercased, whitespace
// collapsed, terminal punctuation stripped.
inline std::string caption_dedup_key(const std::string& text) {
    std::string key = collapse_whitespace(to_lower(text));
    size_t e = key.size();
    while (e > 0 && (key[e - 1] == '.' || key[e - 1] == '!' || key[e - 1] == '?')) --e;
    key.resize(e);
    return trim(key);
}

// Asks the backend for n captions: one per sampled patch in selection order,
// then one for the whole image, cycling over the patches when n is larger.
// With an empty selection every caption conditions on the whole image.
inline std::vector<Caption> generate_captions(const std::string& image_ref,
                                              const PatchSelection& selection, int n,
                                              CaptionerBackend& backend, uint64_t seed) {
    if (n < 1) throw validation_error("caption count n must be >= 1");
    const int grid = backend.patch_count();
    for (int idx : selection.indices) {
        if (idx < 0 || idx >= grid)
            throw validation_error("patch id " + std::to_string(idx) +
                                   " outside backend grid of " + std::to_string(grid));
    }

    // Conditioning plan: sampled patches first, whole image once, then cycle.
    std::vector<std::vector<int>> plan;
    plan.reserve(static_cast<size_t>(n));
    const auto& patches = selection.indices;
    if (patches.empty()) {
        plan.assign(static_cast<size_t>(n), {});
    } else {
        size_t cursor = 0;
        bool whole_done = false;
        while (plan.size() < static_cast<size_t>(n)) {
            if (cursor == patches.size() && !whole_done) {
                plan.push_back({});
                whole_done = true;
                cursor = 0;
                continue;
            }
            if (cursor == patches.size()) cursor = 0;
            plan.push_back({patches[cursor]});
            ++cursor;
        }
    }

    std::vector<Caption> out;
    out.reserve(plan.size());
    for (size_t i = 0; i < plan.size(); ++i) {
        std::vector<std::string> texts;
        try {
            texts = backend.generate(image_ref, plan[i], 1, hash_mix(seed, i));
        } catch (const backend_error&) {
            throw;
        } catch (const std::exception& e) {
            throw backend_error(backend.id(), e.what(), true);
        }
        for (auto& t : texts) {
            std::string trimmed = trim(t);
            if (trimmed.empty()) continue;
            Caption c;
            c.text = std::move(trimmed);
            c.patch_indices = plan[i];
            c.backend_id = backend.id();
            c.gen_index = static_cast<int>(out.size());
            out.push_back(std::move(c));
            if (out.size() == static_cast<size_t>(n)) break;
        }
        if (out.size() == static_cast<size_t>(n)) break;
    }
    if (out.empty())
        throw empty_caption_error("backend '" + backend.id() + "' produced no usable captions for " +
                                  image_ref);
    return out;
}

// Order-preserving removal of near-duplicates; the first occurrence wins.
inline std::vector<Caption> dedup_captions(const std::vector<Caption>& captions) {
    std::vector<Caption> out;
    std::vector<std::string> seen;
    out.reserve(captions.size());
    for (const auto& c : captions) {
        std::string key = caption_dedup_key(c.text);
        bool dup = false;
        for (const auto& s : seen) {
            if (s == key) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            seen.push_back(std::move(key));
            out.push_back(c);
        }
    }
    return out;
}

} // namespace scra
