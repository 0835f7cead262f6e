#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glsim/tensor.hpp"

namespace glsim {

enum class similarity_metric { cosine, l1, l2 };

// per-patch saliency scores; higher = more salient for every metric
struct saliency_map {
    std::vector<double> scores;  // length N, patch order
    std::string metric_tag;      // "GLS-cosine", "GLS-L1", "GLS-L2", "rollout", "MAWS"
    bool degenerate = false;     // zero-norm input or all-zero marginal hit a fallback
};

// instrumentation for the cost cross-checks: flops counts multiply-accumulates
// actually executed, matmuls counts square matrix products
struct flop_counter {
    std::uint64_t flops = 0;
    std::uint64_t matmuls = 0;
};

// global-local similarity: score(i) relates patch token i to the CLS token of the
// same (final layer normed) sequence. cosine scores lie in [-1, 1]; l1/l2 return
// the negated distance so that larger still means more similar.
saliency_map gls_scores(const feature_sequence& features, similarity_metric metric,
                        flop_counter* counter = nullptr);

// attention rollout: per layer, average heads, mix with identity ((A+I)/2),
// renormalize rows, then chain the layers with L-1 matrix products. scores are
// the CLS row of the product, patch columns only.
saliency_map rollout_scores(const attention_stack& attn);

// per-head chained attention: product of the first L-1 layers for each head,
// argmax over the patch columns of the CLS row. requires L >= 2.
struct head_selection {
    std::vector<int> patch_index;  // per head, sequence coordinates in [1, N]
    std::vector<double> score;     // the winning row value per head
};
head_selection psm_selection(const attention_stack& attn, flop_counter* counter = nullptr);

// the per-head CLS-row products that psm_selection argmaxes, averaged over heads
// onto the patch grid; used for heatmap rendering
saliency_map psm_mean_scores(const attention_stack& attn);

// last-layer head-averaged map: a = CLS->patch row, b = patch->CLS column, both
// renormalized over patches; score_i = a_i * b_i / sum_j a_j * b_j.
saliency_map maws_scores(const attention_stack& attn);

// indices of the o largest scores, ties broken toward the lower index,
// returned in ascending index order. throws config_error unless 1 <= o <= N.
std::vector<int> top_o(const saliency_map& map, int o);

} // namespace glsim
