#pragma once

#include <cstdint>
#include <vector>

#include "glsim/arch.hpp"
#include "glsim/cropper.hpp"
#include "glsim/dfsm.hpp"
#include "glsim/tensor.hpp"
#include "glsim/weights.hpp"

namespace glsim {

using logits = std::vector<double>;

// output of the two-token refinement block
struct refined_pair {
    matrix r;    // 2 x D, pre final norm (row 0 = refined original CLS)
    matrix r_ln; // 2 x D, after the aggregator layer norm
};

// one transformer block over [cls_orig; cls_crop] (no positional embeddings),
// then layer norm. throws numeric_error on non-finite values.
refined_pair aggregate(const float* cls_orig, const float* cls_crop,
                       const arch_config& cfg, const weight_set& w);

// logits = feature * classifier (D x T), accumulated in 64-bit
logits classify(const float* feature, const arch_config& cfg, const weight_set& w);

// numerically stable softmax over a logit vector
std::vector<double> softmax_probs(const logits& z);

// softmax-confidence arbitration between two branch predictions
struct selection {
    int cls = 0;
    int source = 0;   // 0 = first argument, ties included; 1 = second
    double prob = 0.0;
};
selection confidence_select(const logits& a, const logits& b);

// label-smoothed cross entropy: q = (1-eps)*onehot(label) + eps/T.
// throws config_error for label out of range or eps outside [0, 1).
double cross_entropy(const logits& z, int label, double eps);

enum class crop_mode { gls, random };

// saliency -> selected patches -> pixel rectangle, with the full-image
// fallback applied when the map is degenerate or constant
struct crop_plan {
    saliency_map saliency;
    std::vector<int> indices;
    pixel_rect rect;
    bool full_image_fallback = false;
};
crop_plan plan_crop(const feature_sequence& features, const arch_config& cfg,
                    similarity_metric metric, int top_count,
                    crop_mode mode = crop_mode::gls, std::uint64_t crop_seed = 0);

struct forward_result {
    logits final_logits;        // from the aggregated pair
    logits orig_logits;         // classify(original CLS)
    logits crop_logits;         // classify(crop CLS)
    saliency_map saliency;
    std::vector<int> top_indices;
    pixel_rect crop;
    bool full_image_fallback = false; // degenerate or constant saliency
};

// the whole pipeline: encode full image (CLS variant 0) -> saliency -> select
// patches -> enclosing crop -> resize to input dims -> encode (CLS variant 1)
// -> aggregate -> classify. a degenerate or constant saliency map falls back to
// the full image as the crop. `image` is expected already normalized.
forward_result glsim_forward(const image_tensor& image, const arch_config& cfg,
                             const weight_set& w, similarity_metric metric,
                             int top_count, crop_mode mode = crop_mode::gls,
                             std::uint64_t crop_seed = 0);

} // namespace glsim
