#pragma once

#include "glsim/arch.hpp"
#include "glsim/tensor.hpp"
#include "glsim/weights.hpp"

namespace glsim {

// strided-window linear embedding: one token per grid cell, token = W*window + b.
// image dims must match cfg (throws config_error otherwise).
matrix patchify(const image_tensor& image, const arch_config& cfg, const weight_set& w);

struct encode_result {
    feature_sequence features;  // post final layer norm
    attention_stack attention;  // post-softmax maps, every layer and head
};

// full forward pass: patchify -> prepend CLS token `cls_variant` -> add learned
// positional embeddings -> `depth` pre-norm blocks -> final layer norm.
// throws numeric_error (with layer index) if non-finite values appear.
encode_result encode(const image_tensor& image, const arch_config& cfg,
                     const weight_set& w, int cls_variant);

namespace detail {

// shared by the encoder blocks and the CLS aggregator:
//   x += attn(LN1(x)); x += mlp(LN2(x))
// when attn_out != nullptr the post-softmax maps are written there (heads x n x n).
void block_forward(matrix& x, const block_weights& bw, int heads, int mlp_ratio,
                   float* attn_out);

void layer_norm(const float* x, int n, const float* scale, const float* bias, float* out);
float gelu(float x);

// y = x * W + b with W stored (in_dim x out_dim) row-major; accumulates in
// 64-bit when in_dim >= 4096
void linear(const float* x, const float* w, const float* b, int in_dim, int out_dim,
            float* y);

} // namespace detail

} // namespace glsim
