#include "glsim/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "glsim/encoder.hpp"
#include "glsim/errors.hpp"

namespace glsim {

refined_pair aggregate(const float* cls_orig, const float* cls_crop,
                       const arch_config& cfg, const weight_set& w) {
    const int d = cfg.width;

    refined_pair out;
    out.r = matrix(2, d);
    std::memcpy(out.r.row(0), cls_orig, sizeof(float) * d);
    std::memcpy(out.r.row(1), cls_crop, sizeof(float) * d);

    // a single transformer block over the two CLS tokens; no positional
    // embeddings — the variant-specific CLS parameters already mark the roles
    detail::block_forward(out.r, w.agg_block, cfg.heads, cfg.mlp_ratio, nullptr);
    for (float v : out.r.data)
        if (!std::isfinite(v)) throw numeric_error("non-finite value in aggregator", 0);

    out.r_ln = matrix(2, d);
    for (int i = 0; i < 2; ++i)
        detail::layer_norm(out.r.row(i), d, w.agg_ln_scale.data(), w.agg_ln_bias.data(),
                           out.r_ln.row(i));
    return out;
}

logits classify(const float* feature, const arch_config& cfg, const weight_set& w) {
    const int d = cfg.width;
    const int t = cfg.num_classes;
    logits z(t, 0.0);
    for (int i = 0; i < d; ++i) {
        const double fi = feature[i];
        const float* row = w.classifier.data() + static_cast<std::size_t>(i) * t;
        for (int c = 0; c < t; ++c) z[c] += fi * row[c];
    }
    return z;
}

std::vector<double> softmax_probs(const logits& z) {
    double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

selection confidence_select(const logits& a, const logits& b) {
    if (a.empty() || a.size() != b.size())
        throw config_error("confidence selection needs two equal-length logit vectors");
    const auto pa = softmax_probs(a);
    const auto pb = softmax_probs(b);
    const int ia = static_cast<int>(std::max_element(pa.begin(), pa.end()) - pa.begin());
    const int ib = static_cast<int>(std::max_element(pb.begin(), pb.end()) - pb.begin());

    selection s;
    if (pa[ia] >= pb[ib]) { // tie keeps the first branch
        s.cls = ia;
        s.source = 0;
        s.prob = pa[ia];
    } else {
        s.cls = ib;
        s.source = 1;
        s.prob = pb[ib];
    }
    return s;
}

double cross_entropy(const logits& z, int label, double eps) {
    const int t = static_cast<int>(z.size());
    if (label < 0 || label >= t) throw config_error("label out of range");
    if (eps < 0.0 || eps >= 1.0) throw config_error("smoothing must lie in [0, 1)");

    double mx = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - mx);
    lse = mx + std::log(lse);

    double loss = 0.0;
    for (int c = 0; c < t; ++c) {
        const double q = (c == label ? 1.0 - eps : 0.0) + eps / t;
        loss -= q * (z[c] - lse);
    }
    return loss;
}

crop_plan plan_crop(const feature_sequence& features, const arch_config& cfg,
                    similarity_metric metric, int top_count, crop_mode mode,
                    std::uint64_t crop_seed) {
    const grid_shape grid = grid_dims(cfg);

    crop_plan plan;
    plan.saliency = gls_scores(features, metric);
    if (mode == crop_mode::random) {
        plan.indices = random_indices(crop_seed, top_count, grid.patches());
    } else {
        plan.indices = top_o(plan.saliency, top_count);
    }

    const auto [mn, mx] =
        std::minmax_element(plan.saliency.scores.begin(), plan.saliency.scores.end());
    const bool flat = plan.saliency.degenerate || *mn == *mx;
    if (mode == crop_mode::gls && flat) {
        // nothing stands out; fall back to the whole frame
        plan.full_image_fallback = true;
        plan.rect = pixel_rect{0, 0, cfg.image_w, cfg.image_h};
    } else {
        plan.rect = box_to_pixels(enclosing_box(plan.indices, grid), cfg);
    }
    return plan;
}

forward_result glsim_forward(const image_tensor& image, const arch_config& cfg,
                             const weight_set& w, similarity_metric metric,
                             int top_count, crop_mode mode, std::uint64_t crop_seed) {
    forward_result res;
    const encode_result full = encode(image, cfg, w, 0);
    res.orig_logits = classify(full.features.cls(), cfg, w);

    crop_plan plan = plan_crop(full.features, cfg, metric, top_count, mode, crop_seed);
    res.saliency = std::move(plan.saliency);
    res.top_indices = std::move(plan.indices);
    res.crop = plan.rect;
    res.full_image_fallback = plan.full_image_fallback;

    const image_tensor cropped = crop_resize(image, res.crop, cfg.image_w, cfg.image_h);
    const encode_result local = encode(cropped, cfg, w, 1);
    res.crop_logits = classify(local.features.cls(), cfg, w);

    const refined_pair pair = aggregate(full.features.cls(), local.features.cls(), cfg, w);
    res.final_logits = classify(pair.r_ln.row(0), cfg, w);
    return res;
}

} // namespace glsim
