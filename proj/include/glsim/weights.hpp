#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glsim/arch.hpp"

namespace glsim {

// one transformer block. projection matrices are stored row-major with
// rows = input features, cols = output features (y = x * W + b); the patch
// kernel in weight_set below is the one exception.
struct block_weights {
    std::vector<float> ln1_scale, ln1_bias;
    std::vector<float> wq, bq, wk, bk, wv, bv; // D x D, D
    std::vector<float> wo, bo;                 // D x D, D
    std::vector<float> ln2_scale, ln2_bias;
    std::vector<float> w1, b1; // D x (mlp_ratio*D), (mlp_ratio*D)
    std::vector<float> w2, b2; // (mlp_ratio*D) x D, D
};

struct weight_set {
    std::vector<float> patch_kernel; // D x (3*P*P): row d = kernel for output channel d,
                                     // flattened channel-major then row then col
    std::vector<float> patch_bias;   // D
    std::vector<float> pos_embed;    // (N+1) x D
    std::vector<float> cls_tokens;   // cls_variants x D
    std::vector<block_weights> blocks;
    std::vector<float> final_ln_scale, final_ln_bias;
    block_weights agg_block;                     // refines [cls_orig; cls_crop]
    std::vector<float> agg_ln_scale, agg_ln_bias;
    std::vector<float> classifier;               // D x T
};

// all tensors allocated to the config's shapes, zero filled, LN scales 1
weight_set alloc_weights(const arch_config& cfg);

// deterministic pseudo-random init: one splitmix64 stream from `seed` feeds a
// Box-Muller sampler; weights ~ N(0, 0.02^2) in a fixed fill order, all biases 0,
// layer norm scales 1. identical seeds give bit-identical weights.
weight_set init_weights(std::uint64_t seed, const arch_config& cfg);

// single-file container: one UTF-8 JSON line (tensor name -> shape/offset,
// declared blob byte length, embedded config) + '\n' + concatenated
// little-endian f32 blobs. throws data_error on malformed input.
void save_weights(const std::string& path, const arch_config& cfg, const weight_set& w);

struct loaded_weights {
    arch_config config;
    weight_set weights;
};
loaded_weights load_weights(const std::string& path);

} // namespace glsim
