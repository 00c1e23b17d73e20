#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "scra/errors.hpp"
#include "scra/hash.hpp"

namespace scra {

// How gradients are rectified before they weight the attention values.
// positive keeps max(0, g) (the usual GradCAM convention), negative keeps
// min(0, g) as the relevance formula is printed.
enum class RectifyMode { positive, negative };

enum class PatchStrategy { deterministic_topk, weighted_sample };

inline std::string to_string(RectifyMode m) {
    return m == RectifyMode::positive ? "positive" : "negative";
}

inline std::string to_string(PatchStrategy s) {
    return s == PatchStrategy::deterministic_topk ? "deterministic_topk" : "weighted_sample";
}

inline RectifyMode rectify_mode_from_string(const std::string& s) {
    if (s == "positive") return RectifyMode::positive;
    if (s == "negative") return RectifyMode::negative;
    throw validation_error("unknown rectify mode: " + s);
}

inline PatchStrategy patch_strategy_from_string(const std::string& s) {
    if (s == "deterministic_topk") return PatchStrategy::deterministic_topk;
    if (s == "weighted_sample") return PatchStrategy::weighted_sample;
    throw validation_error("unknown patch strategy: " + s);
}

// Inputs of the cross-attention score: text features [N x Dq], patch
// features [M x Dv], and the query / key projection heads.
struct FeatureMatrices {
    Eigen::MatrixXd text_features;  // N x Dq
    Eigen::MatrixXd patch_features; // M x Dv
    Eigen::MatrixXd query_proj;     // Dq x Dh
    Eigen::MatrixXd key_proj;       // Dv x Dh
};

// Cross-attention values and the gradients of the image-text matching score
// with respect to them. One N x M slice per attention head.
struct AttentionTensor {
    std::vector<Eigen::MatrixXd> values;
    std::vector<Eigen::MatrixXd> grads;

    int heads() const { return static_cast<int>(values.size()); }
    int tokens() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }
    int patches() const { return values.empty() ? 0 : static_cast<int>(values[0].cols()); }
};

// Per-patch question relevance for one (image, question) pair.
struct RelevanceMap {
    Eigen::VectorXd scores;
    RectifyMode rectify_mode = RectifyMode::positive;
    std::string image_id;
    std::string question_id;
};

struct PatchSelection {
    std::vector<int> indices; // distinct patch ids, most relevant first under topk
    int k = 0;
    PatchStrategy strategy = PatchStrategy::deterministic_topk;
    uint64_t seed = 0;
    bool uniform_fallback = false; // weighted sampling fell back to uniform
};

namespace detail {

inline void require_finite(const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite()) throw validation_error(std::string(name) + " contains non-finite entries");
}

} // namespace detail

// Row-wise softmax of (f_q W_Q)(f_v W_K)^T / sqrt(D_q). Row n holds the
// attention of text token n over the M patches; each row sums to 1.
inline Eigen::MatrixXd cross_attention_scores(const FeatureMatrices& f) {
    const auto n = f.text_features.rows();
    const auto m = f.patch_features.rows();
    const auto dq = f.text_features.cols();
    const auto dv = f.patch_features.cols();
    if (n < 1 || m < 1) throw shape_error("need at least one text token and one patch");
    if (dq < 1) throw shape_error("text feature dimension must be positive");
    if (f.query_proj.rows() != dq)
        throw shape_error("query projection rows do not match text feature dim");
    if (f.key_proj.rows() != dv)
        throw shape_error("key projection rows do not match patch feature dim");
    if (f.query_proj.cols() != f.key_proj.cols())
        throw shape_error("query and key projections disagree on head dim");

    detail::require_finite(f.text_features, "text_features");
    detail::require_finite(f.patch_features, "patch_features");
    detail::require_finite(f.query_proj, "query_proj");
    detail::require_finite(f.key_proj, "key_proj");

    Eigen::MatrixXd q = f.text_features * f.query_proj;  // N x Dh
    Eigen::MatrixXd k = f.patch_features * f.key_proj;   // M x Dh
    Eigen::MatrixXd logits = (q * k.transpose()) / std::sqrt(static_cast<double>(dq));

    Eigen::MatrixXd out(n, m);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mx = logits.row(r).maxCoeff();
        Eigen::ArrayXd e = (logits.row(r).array() - mx).exp();
        out.row(r) = (e / e.sum()).matrix();
    }
    return out;
}

// R[m] = (1/G) sum_g sum_l rectify(grad[g,l,m]) * value[g,l,m].
inline RelevanceMap patch_relevance(const AttentionTensor& attn,
                                    RectifyMode mode = RectifyMode::positive) {
    if (attn.values.empty()) throw shape_error("attention tensor has no heads");
    if (attn.values.size() != attn.grads.size())
        throw shape_error("attention values and grads disagree on head count");
    const int g_count = attn.heads();
    const auto n = attn.values[0].rows();
    const auto m = attn.values[0].cols();
    if (n < 1 || m < 1) throw shape_error("attention slices must be non-empty");

    for (int g = 0; g < g_count; ++g) {
        if (attn.values[g].rows() != n || attn.values[g].cols() != m ||
            attn.grads[g].rows() != n || attn.grads[g].cols() != m)
            throw shape_error("attention head " + std::to_string(g) + " has mismatched shape");
        detail::require_finite(attn.grads[g], "attention grads");
        detail::require_finite(attn.values[g], "attention values");
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto row = attn.values[g].row(r);
            if (row.minCoeff() < -1e-9 || std::abs(row.sum() - 1.0) > 1e-6)
                throw validation_error("attention values row is not a probability vector");
        }
    }

    RelevanceMap rel;
    rel.rectify_mode = mode;
    rel.scores = Eigen::VectorXd::Zero(m);
    for (int g = 0; g < g_count; ++g) {
        Eigen::ArrayXXd rectified;
        if (mode == RectifyMode::positive) rectified = attn.grads[g].array().max(0.0);
        else rectified = attn.grads[g].array().min(0.0);
        rel.scores += (rectified * attn.values[g].array()).colwise().sum().matrix().transpose();
    }
    rel.scores /= static_cast<double>(g_count);
    return rel;
}

// Picks min(k, M) patches. deterministic_topk takes the highest scores with
// ties broken toward the lower index; weighted_sample draws without
// replacement proportionally to max(score, 0) + epsilon.
inline PatchSelection sample_patches(const RelevanceMap& relevance, int k,
                                     PatchStrategy strategy = PatchStrategy::deterministic_topk,
                                     uint64_t seed = 0) {
    if (k < 1) throw validation_error("patch count k must be >= 1");
    const int m = static_cast<int>(relevance.scores.size());
    if (m < 1) throw validation_error("relevance map is empty");
    const int take = std::min(k, m);

    PatchSelection sel;
    sel.k = k;
    sel.strategy = strategy;
    sel.seed = seed;

    if (strategy == PatchStrategy::deterministic_topk) {
        std::vector<int> order(static_cast<size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (relevance.scores[a] != relevance.scores[b])
                return relevance.scores[a] > relevance.scores[b];
            return a < b;
        });
        sel.indices.assign(order.begin(), order.begin() + take);
        return sel;
    }

    constexpr double kEps = 1e-12;
    std::vector<double> weights(static_cast<size_t>(m));
    double positive_mass = 0.0;
    for (int i = 0; i < m; ++i) {
        const double w = std::max(relevance.scores[i], 0.0);
        positive_mass += w;
        weights[static_cast<size_t>(i)] = w + kEps;
    }
    if (positive_mass <= 0.0) {
        sel.uniform_fallback = true;
        std::fill(weights.begin(), weights.end(), 1.0);
    }

    DeterministicRng rng(seed);
    for (int drawn = 0; drawn < take; ++drawn) {
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double u = rng.next_unit() * total;
        int chosen = -1;
        for (int i = 0; i < m; ++i) {
            if (weights[static_cast<size_t>(i)] <= 0.0) continue;
            u -= weights[static_cast<size_t>(i)];
            if (u <= 0.0) {
                chosen = i;
                break;
            }
        }
        if (chosen < 0) { // numeric slack: fall back to the last remaining id
            for (int i = m - 1; i >= 0; --i)
                if (weights[static_cast<size_t>(i)] > 0.0) {
                    chosen = i;
                    break;
                }
        }
        sel.indices.push_back(chosen);
        weights[static_cast<size_t>(chosen)] = 0.0;
    }
    return sel;
}

} // namespace scra
